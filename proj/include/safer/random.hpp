#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace safer {

using Rng = std::mt19937_64;

// Unbiased draw from [0, n) by rejection; unlike std::uniform_int_distribution
// the sequence is identical across standard library implementations.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = Rng::max() - (Rng::max() % n);
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

// Moves a uniform random k-subset to the front of `values`.
template <class T>
void partial_shuffle(std::span<T> values, std::size_t k, Rng& rng) {
  const std::size_t n = values.size();
  for (std::size_t i = 0; i < k && i + 1 < n; ++i) {
    const auto j = i + static_cast<std::size_t>(uniform_index(rng, n - i));
    std::swap(values[i], values[j]);
  }
}

}  // namespace safer
