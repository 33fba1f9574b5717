#pragma once

// Seed derivation and uniform draws shared by every stochastic routine.

#include <cmath>
#include <cstdint>
#include <random>

namespace hiercdm {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Independent stream seed for replicate `index` of the task labelled `tag`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) {
  return splitmix64(splitmix64(splitmix64(seed) ^ tag) + index);
}

enum SeedTag : std::uint64_t {
  kTagParametric = 0x7062,
  kTagNonparametric = 0x6e70,
  kTagStarts = 0x7374,
  kTagRep = 0x7270,
  kTagData = 0x6474,
  kTagQ = 0x716d,
};

/// Uniform on [0,1) with 53 random bits; identical on every platform.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

/// Uniform integer in [0, n).
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  return static_cast<std::uint64_t>(uniform01(rng) * static_cast<double>(n)) % n;
}

inline double standard_exponential(Rng& rng) { return -std::log1p(-uniform01(rng)); }

}  // namespace hiercdm
