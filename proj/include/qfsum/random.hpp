#pragma once

// Portable seeded randomness. std::mt19937_64 output is fixed by the
// standard, but the std distributions and std::shuffle are not, so results
// would differ between standard libraries. These helpers only use raw
// engine output.

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace qfsum {

/// Uniform integer in [0, bound) by rejection sampling. bound must be > 0.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

/// Uniform real in [0, 1) from the top 53 bits.
inline double uniform_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Fisher-Yates shuffle.
template <typename T>
void seeded_shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_below(rng, i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace qfsum
