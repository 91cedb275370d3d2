#include "qsurf/samples.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>

namespace qsurf {

namespace {

constexpr int kDigitBits = 11;
constexpr int kPasses = 6; // ceil(64 / 11)
constexpr std::size_t kBuckets = std::size_t{ 1 } << kDigitBits;
constexpr std::uint64_t kMask = kBuckets - 1;

inline std::uint64_t
to_key(double v)
{
  const auto bits = std::bit_cast<std::uint64_t>(v);
  return (bits >> 63) ? ~bits : bits | (std::uint64_t{ 1 } << 63);
}

inline double
from_key(std::uint64_t key)
{
  const std::uint64_t bits =
    (key >> 63) ? key & ~(std::uint64_t{ 1 } << 63) : ~key;
  return std::bit_cast<double>(bits);
}

} // namespace

void
sort_values(std::span<double> values)
{
  const std::size_t n = values.size();
  if (n < 4096) {
    std::sort(values.begin(), values.end());
    return;
  }
  std::vector<std::uint64_t> keys(n), scratch(n);
  std::vector<std::array<std::size_t, kBuckets>> hist(kPasses);
  for (auto& h : hist)
    h.fill(0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t k = to_key(values[i]);
    keys[i] = k;
    for (int p = 0; p < kPasses; ++p)
      ++hist[p][(k >> (p * kDigitBits)) & kMask];
  }
  std::uint64_t* src = keys.data();
  std::uint64_t* dst = scratch.data();
  for (int p = 0; p < kPasses; ++p) {
    auto& h = hist[p];
    // skip digits shared by every key
    if (std::any_of(h.begin(), h.end(), [n](std::size_t c) { return c == n; }))
      continue;
    std::size_t sum = 0;
    for (auto& c : h) {
      const std::size_t t = c;
      c = sum;
      sum += t;
    }
    const int shift = p * kDigitBits;
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint64_t k = src[i];
      dst[h[(k >> shift) & kMask]++] = k;
    }
    std::swap(src, dst);
  }
  for (std::size_t i = 0; i < n; ++i)
    values[i] = from_key(src[i]);
}

} // namespace qsurf
