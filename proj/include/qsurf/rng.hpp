#pragma once

#include <cstdint>
#include <random>

namespace qsurf {

/// Seeded generator with explicit stream splitting.
///
/// The engine is std::mt19937_64 initialised through std::seed_seq from the
/// words (seed, stream_a, stream_b); both are fully specified by the standard,
/// so sequences are identical across conforming platforms. Uniform and normal
/// variates are produced here rather than through <random> distributions,
/// whose algorithms are implementation-defined.
class Rng
{
public:
  explicit Rng(std::uint64_t seed,
               std::uint64_t stream_a = 0,
               std::uint64_t stream_b = 0);

  std::uint64_t next() { return engine_(); }

  //! Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  //! Uniform on (0, 1).
  double uniform_open();

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  //! Standard normal (Marsaglia polar method).
  double normal();

  //! Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

} // namespace qsurf
