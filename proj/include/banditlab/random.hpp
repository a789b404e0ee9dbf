#pragma once

// Seeded random streams. Every consumer (environment contexts, environment
// noise, bump parameters, policy tie-free draws, KORS coin flips) gets its own
// stream derived from a base seed and a fixed tag, so replaying one component
// never perturbs another. Draws are built directly on the raw engine output
// to stay bit-identical across standard library implementations.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace banditlab {

using Rng = std::mt19937_64;

enum class StreamTag : std::uint64_t {
  env_context = 1,
  env_noise = 2,
  env_parameters = 3,
  policy = 4,
  kors = 5,
  resample = 6,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, StreamTag tag) {
  return splitmix64(splitmix64(base) ^ (static_cast<std::uint64_t>(tag) * 0xd1b54a32d192ed03ULL));
}

inline Rng make_stream(std::uint64_t base, StreamTag tag) { return Rng(derive_seed(base, tag)); }

/// Uniform on [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) { return double(rng() >> 11) * 0x1.0p-53; }

/// Uniform index in [0, n).
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return static_cast<std::size_t>(uniform01(rng) * double(n)) % n;
}

/// Standard normal draw (Box-Muller, one variate per call).
inline double standard_normal(Rng& rng) {
  const double u1 = 1.0 - uniform01(rng);  // (0, 1]
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace banditlab
