#pragma once

// Counter-based random numbers. Every variate is a pure function of
// (seed, stream, index, channel), so results do not depend on how particles
// are scheduled across threads, and perturbed runs can share noise exactly.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace mfc::rng {

// splitmix64 finalizer
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t key(std::uint64_t seed, std::uint64_t stream,
                            std::uint64_t index, std::uint64_t channel) {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ stream);
  h = mix64(h ^ (index * 0xd1342543de82ef95ULL));
  return mix64(h ^ (channel + 0x632be59bd9b4e019ULL));
}

// Uniform on (0, 1): never returns 0 or 1.
inline double uniform(std::uint64_t k) {
  return (static_cast<double>(k >> 11) + 0.5) * 0x1.0p-53;
}

inline double normal(std::uint64_t seed, std::uint64_t stream,
                     std::uint64_t index, std::uint64_t channel) {
  const std::uint64_t k = key(seed, stream, index, channel);
  const double u1 = uniform(k);
  const double u2 = uniform(mix64(k ^ 0x5851f42d4c957f2dULL));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Reserved stream tags, kept apart from particle indices.
inline constexpr std::uint64_t kInitialStream = 0xffffffff00000001ULL;
inline constexpr std::uint64_t kRegressionStream = 0xffffffff00000002ULL;

}  // namespace mfc::rng
