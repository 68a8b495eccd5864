#pragma once

#include <cstdint>
#include <random>

namespace roselm {

using Rng = std::mt19937_64;

/// Child seed for stream `stream` of `seed` (splitmix64 finalizer over both words).
/// Every independent random stream in the library is derived through this so that
/// results depend only on (seed, stream) and never on evaluation order.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Uniform draw in [0, 1).
inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace roselm
