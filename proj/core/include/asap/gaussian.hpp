#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace asap {

// Standard normal density.
inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

// Standard normal CDF, accurate in both tails.
inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

// Additive and multiplicative correction terms of a Gaussian truncated to
// X > -z (X standard normal):
//   v(z) = N(z) / Phi(z)      = E[X | X > -z]
//   w(z) = v(z) * (v(z) + z)  = 1 - Var[X | X > -z]
struct TruncatedMoments {
  double v;
  double w;
};

// Stable for z << 0 (asymptotic Mills-ratio series once Phi(z) underflows).
// Throws std::invalid_argument for non-finite z.
TruncatedMoments truncated_gaussian_moments(double z);

// One-dimensional Gaussian in natural parameters: precision and
// precision-adjusted mean. precision == 0 is the uninformative message.
struct NaturalGaussian {
  double precision = 0.0;
  double shifted_mean = 0.0;  // precision * mean

  static NaturalGaussian from_moments(double mean, double variance) {
    return {1.0 / variance, mean / variance};
  }
  double mean() const { return shifted_mean / precision; }
  double variance() const { return 1.0 / precision; }

  NaturalGaussian operator*(const NaturalGaussian& o) const {
    return {precision + o.precision, shifted_mean + o.shifted_mean};
  }
  NaturalGaussian operator/(const NaturalGaussian& o) const {
    return {precision - o.precision, shifted_mean - o.shifted_mean};
  }
  friend bool operator==(const NaturalGaussian&,
                         const NaturalGaussian&) = default;
};

using Rng = std::mt19937_64;

// Derives an independent seed from a master seed and a stream label
// (splitmix64 finalizer over the combination).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                          std::uint64_t substream = 0);

// Uniform draw in [0, 1) with 53 random bits; identical across standard
// libraries, unlike std::uniform_real_distribution.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, bound) by rejection; portable across libraries.
std::uint64_t uniform_index(Rng& rng, std::uint64_t bound);

}  // namespace asap
