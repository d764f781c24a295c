#pragma once

#include <cstdint>
#include <random>

namespace aneudet {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to derive independent child seeds from a base
// seed and a counter so parallel work is schedule-independent.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t counter) {
  return mix_seed(mix_seed(base) ^ counter);
}

// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

// Uniform integer in [0, n) by multiply-shift; n > 0.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(rng()) * n) >> 64);
}

inline double normal(Rng& rng, double sigma) {
  std::normal_distribution<double> dist(0.0, sigma);
  return dist(rng);
}

}  // namespace aneudet
