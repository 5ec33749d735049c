#pragma once

#include <cstdint>
#include <random>

#include "blinddf/types.hpp"

namespace blinddf {

using Rng = std::mt19937_64;

/// splitmix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derive an independent child seed from a parent seed and a stream id.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream) {
  return splitmix64(splitmix64(parent) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

/// Circularly-symmetric complex Gaussian with E|x|^2 = variance.
inline cplx complex_gaussian(Rng& rng, double variance = 1.0) {
  std::normal_distribution<double> n(0.0, 1.0);
  const double s = std::sqrt(variance / 2.0);
  const double re = n(rng);
  const double im = n(rng);
  return {s * re, s * im};
}

inline double random_bipolar(Rng& rng) {
  return (rng() >> 63) ? 1.0 : -1.0;
}

}  // namespace blinddf
