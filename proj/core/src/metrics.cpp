#include "asap/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace asap {

namespace {

void check_lengths(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("length mismatch");
  if (a.size() < 2) throw std::invalid_argument("need at least 2 entries");
}

double mean_of(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

}  // namespace

double rmse_aligned(std::span<const double> estimated,
                    std::span<const double> truth) {
  check_lengths(estimated, truth);
  const double me = mean_of(estimated);
  const double mt = mean_of(truth);
  double sum = 0.0;
  for (std::size_t i = 0; i < estimated.size(); ++i) {
    const double d = (estimated[i] - me) - (truth[i] - mt);
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(estimated.size()));
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t k = 0; k < order.size();) {
    std::size_t end = k + 1;
    while (end < order.size() && values[order[end]] == values[order[k]]) ++end;
    const double rank = 0.5 * static_cast<double>(k + 1 + end);
    for (std::size_t m = k; m < end; ++m) ranks[order[m]] = rank;
    k = end;
  }
  return ranks;
}

double srocc(std::span<const double> estimated, std::span<const double> truth) {
  check_lengths(estimated, truth);
  const auto re = average_ranks(estimated);
  const auto rt = average_ranks(truth);
  const double me = mean_of(re);
  const double mt = mean_of(rt);
  double num = 0.0, de = 0.0, dt = 0.0;
  for (std::size_t i = 0; i < re.size(); ++i) {
    num += (re[i] - me) * (rt[i] - mt);
    de += (re[i] - me) * (re[i] - me);
    dt += (rt[i] - mt) * (rt[i] - mt);
  }
  if (de == 0.0 || dt == 0.0) {
    throw std::domain_error("srocc: correlation undefined for constant input");
  }
  return std::clamp(num / std::sqrt(de * dt), -1.0, 1.0);
}

double fisher_transform(double correlation) {
  constexpr double kLimit = 1.0 - 1e-7;
  return std::atanh(std::clamp(correlation, -kLimit, kLimit));
}

}  // namespace asap
