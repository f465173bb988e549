#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

namespace apo {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive independent stream seeds from one
// experiment seed so that e.g. augmentation draws never shift action draws.
constexpr std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Named streams for mix_seed.
enum class Stream : std::uint64_t {
  init_policy = 1,
  init_value = 2,
  init_perturber = 3,
  action = 4,
  env = 5,
  augment = 6,
  shuffle = 7,
  noise = 8,
  eval = 9,
};

inline Rng make_rng(std::uint64_t base, Stream s) {
  return Rng(mix_seed(base, static_cast<std::uint64_t>(s)));
}

inline bool all_finite(std::span<const double> xs) {
  for (double x : xs)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace apo
