#include "asap/gaussian.hpp"

#include <limits>
#include <stdexcept>

namespace asap {

namespace {

// Below this point Phi(z) loses relative accuracy against v + z cancellation,
// and the asymptotic expansion of the Mills ratio is already exact to double
// precision.
constexpr double kAsymptoticThreshold = -10.0;

// 1 - x * R(x) for the Mills ratio R(x) = Phi(-x) / N(x), x >= 10:
//   sum_{k>=1} (-1)^(k+1) (2k-1)!! / x^(2k)
double mills_complement(double x) {
  const double inv_x2 = 1.0 / (x * x);
  double term = inv_x2;
  double sum = term;
  for (int k = 2; k < 60; ++k) {
    term *= -(2.0 * k - 1.0) * inv_x2;
    sum += term;
    if (std::fabs(term) < 1e-18 * std::fabs(sum)) break;
  }
  return sum;
}

}  // namespace

TruncatedMoments truncated_gaussian_moments(double z) {
  if (!std::isfinite(z)) {
    throw std::invalid_argument("truncated_gaussian_moments: non-finite input");
  }
  if (z < kAsymptoticThreshold) {
    const double x = -z;
    const double s = mills_complement(x);
    const double v = x / (1.0 - s);
    const double v_plus_z = x * s / (1.0 - s);
    return {v, v * v_plus_z};
  }
  const double v = normal_pdf(z) / normal_cdf(z);
  return {v, v * (v + z)};
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                          std::uint64_t substream) {
  auto mix = [](std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  };
  return mix(mix(mix(master) ^ stream) ^ (substream * 0xd1b54a32d192ed03ULL));
}

std::uint64_t uniform_index(Rng& rng, std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("uniform_index: empty range");
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() -
      std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

}  // namespace asap
