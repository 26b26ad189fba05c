#pragma once

#include "wosno/types.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace wosno {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used only to derive well-separated engine seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Substream keyed on (seed, a, b, c). A walk seeded from
// (seed, instance, point, trajectory) is a pure function of that tuple, which
// is what makes results independent of the worker count.
inline Rng make_stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                       std::uint64_t c = 0) {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ a);
  h = mix64(h ^ (b * 0xd6e8feb86659fd93ULL));
  h = mix64(h ^ (c * 0xa0761d6478bd642fULL));
  return Rng(h);
}

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

template <int D>
Vec<D> uniform_direction(Rng& rng);

template <>
inline Vec2 uniform_direction<2>(Rng& rng) {
  const double theta = 2.0 * std::numbers::pi * uniform01(rng);
  return {std::cos(theta), std::sin(theta)};
}

template <>
inline Vec3 uniform_direction<3>(Rng& rng) {
  const double z = 1.0 - 2.0 * uniform01(rng);
  const double phi = 2.0 * std::numbers::pi * uniform01(rng);
  const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
  return {s * std::cos(phi), s * std::sin(phi), z};
}

}  // namespace wosno
