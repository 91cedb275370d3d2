#include "qsurf/rng.hpp"

#include <cmath>

namespace qsurf {

Rng::Rng(std::uint64_t seed, std::uint64_t stream_a, std::uint64_t stream_b)
{
  auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v); };
  auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  std::seed_seq seq{ lo(seed),     hi(seed),     lo(stream_a),
                     hi(stream_a), lo(stream_b), hi(stream_b) };
  engine_.seed(seq);
}

double
Rng::uniform_open()
{
  for (;;) {
    const double u = uniform();
    if (u > 0.0)
      return u;
  }
}

double
Rng::normal()
{
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double a, b, s;
  do {
    a = 2.0 * uniform() - 1.0;
    b = 2.0 * uniform() - 1.0;
    s = a * a + b * b;
  } while (s >= 1.0 || s == 0.0);
  const double scale = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = b * scale;
  has_spare_ = true;
  return a * scale;
}

std::uint64_t
Rng::below(std::uint64_t bound)
{
  // rejection keeps the draw exactly uniform
  const std::uint64_t limit = bound * (UINT64_MAX / bound);
  for (;;) {
    const std::uint64_t x = engine_();
    if (x < limit)
      return x % bound;
  }
}

} // namespace qsurf
