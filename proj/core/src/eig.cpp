#include "asap/eig.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace asap {

double kl_divergence(const GaussianScore& p, const GaussianScore& q) {
  // r - 1 - ln r with r = var_p / var_q, written to stay accurate near r = 1.
  const double x = (p.variance - q.variance) / q.variance;
  const double d = p.mean - q.mean;
  return 0.5 * (x - std::log1p(x) + d * d / q.variance);
}

double kl_divergence_diag_gaussian(const ScorePosterior& p,
                                   const ScorePosterior& q) {
  if (p.size() != q.size()) {
    throw std::invalid_argument("kl_divergence: length mismatch");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i].variance > 0.0) || !(q[i].variance > 0.0)) {
      throw std::invalid_argument("kl_divergence: non-positive variance");
    }
    sum += kl_divergence(p[i], q[i]);
  }
  return sum;
}

EigMatrix::EigMatrix(std::size_t n)
    : n_(n), gain_(n * n, 0.0), evaluated_(n * n, 0) {}

std::optional<double> EigMatrix::gain(std::size_t i, std::size_t j) const {
  if (i == j || !evaluated(i, j)) return std::nullopt;
  return gain_[i * n_ + j];
}

void EigMatrix::set(std::size_t i, std::size_t j, double gain) {
  if (i == j) throw std::invalid_argument("EigMatrix: diagonal is undefined");
  if (!evaluated(i, j)) ++num_evaluated_;
  gain_[i * n_ + j] = gain_[j * n_ + i] = gain;
  evaluated_[i * n_ + j] = evaluated_[j * n_ + i] = 1;
}

double EigMatrix::evaluated_fraction() const {
  const std::size_t pairs = pairs_per_standard_trial(n_);
  return pairs == 0 ? 0.0 : static_cast<double>(num_evaluated_) / pairs;
}

SelectionProbabilityMatrix selection_probabilities(const ScorePosterior& posterior,
                                                   const ModelConfig& config) {
  const std::size_t n = posterior.size();
  if (n < 2) throw std::invalid_argument("selection_probabilities: n < 2");
  std::vector<double> raw(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double sigma = std::sqrt(posterior[i].variance +
                                     posterior[j].variance +
                                     config.beta * config.beta);
      const double x = (posterior[i].mean - posterior[j].mean) /
                       (std::numbers::sqrt2 * sigma);
      // min(p, 1 - p) without cancellation.
      raw[i * n + j] = raw[j * n + i] = normal_cdf(-std::fabs(x));
    }
  }
  std::vector<double> normalized(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double row_max = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) row_max = std::max(row_max, raw[i * n + j]);
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      normalized[i * n + j] = row_max > 0.0 ? raw[i * n + j] / row_max : 1.0;
    }
  }
  return SelectionProbabilityMatrix(n, std::move(raw), std::move(normalized));
}

EigEvaluator::EigEvaluator(const ExperimentState& state, EigMode mode,
                           FactorGraph* graph, EpSettings settings)
    : state_(state), mode_(mode), settings_(settings), graph_(graph) {
  if (state.posterior_stale()) {
    throw std::logic_error("EigEvaluator: posterior is stale");
  }
  if (mode_ == EigMode::full && graph_ == nullptr) {
    owned_.emplace(state.n(), state.config(),
                   settings_.group_identical_comparisons);
    for (const auto& r : state.history()) owned_->add_comparison(r);
    owned_->run(settings_);
    graph_ = &*owned_;
  }
}

double EigEvaluator::kl_against_current_full() {
  const ScorePosterior& current = state_.posterior();
  const auto means = graph_->means();
  const auto vars = graph_->variances();
  double sum = 0.0;
  for (std::size_t k = 0; k < current.size(); ++k) {
    sum += kl_divergence(GaussianScore{means[k], vars[k]}, current[k]);
  }
  return sum;
}

double EigEvaluator::pair_eig_full(std::size_t i, std::size_t j) {
  double kl[2];
  const int outcomes[2] = {kFirstPreferred, kSecondPreferred};
  EpSettings trial = settings_;
  trial.tolerance = settings_.trial_tolerance;
  for (int k = 0; k < 2; ++k) {
    graph_->begin_trial();
    try {
      graph_->add_comparison(i, j, outcomes[k]);
      graph_->run(trial, /*verify=*/false);
      kl[k] = kl_against_current_full();
    } catch (...) {
      graph_->rollback();
      throw;
    }
    graph_->rollback();
  }
  const double p = outcome_probability(state_.posterior()[i],
                                       state_.posterior()[j], state_.config());
  return p * kl[0] + (1.0 - p) * kl[1];
}

double EigEvaluator::pair_eig_approx(std::size_t i, std::size_t j) {
  const ScorePosterior& current = state_.posterior();
  const GaussianScore& a = current[i];
  const GaussianScore& b = current[j];
  // Entries other than i and j do not move, so their KL terms vanish.
  const auto [a_win, b_lose] = adf_update(a, b, kFirstPreferred, state_.config());
  const auto [a_lose, b_win] = adf_update(a, b, kSecondPreferred, state_.config());
  const double kl_first = kl_divergence(a_win, a) + kl_divergence(b_lose, b);
  const double kl_second = kl_divergence(a_lose, a) + kl_divergence(b_win, b);
  const double p = outcome_probability(a, b, state_.config());
  return p * kl_first + (1.0 - p) * kl_second;
}

double EigEvaluator::pair_eig(std::size_t i, std::size_t j) {
  if (i == j || i >= state_.n() || j >= state_.n()) {
    throw std::invalid_argument("pair_eig: invalid pair");
  }
  return mode_ == EigMode::full ? pair_eig_full(i, j) : pair_eig_approx(i, j);
}

EigMatrix EigEvaluator::matrix(bool selective, Rng& rng) {
  const std::size_t n = state_.n();
  std::vector<double> draws;
  draws.reserve(pairs_per_standard_trial(n));
  for (std::size_t p = 0; p < pairs_per_standard_trial(n); ++p) {
    draws.push_back(uniform01(rng));
  }
  std::optional<SelectionProbabilityMatrix> q;
  if (selective) q = selection_probabilities(state_.posterior(), state_.config());

  EigMatrix out(n);
  std::size_t p = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j, ++p) {
      if (q && !(q->threshold(i, j) > draws[p])) continue;
      out.set(i, j, pair_eig(i, j));
    }
  }
  return out;
}

double pair_eig(const ExperimentState& state, std::size_t i, std::size_t j,
                EigMode mode, const EpSettings& settings) {
  EigEvaluator evaluator(state, mode, nullptr, settings);
  return evaluator.pair_eig(i, j);
}

EigMatrix eig_matrix(const ExperimentState& state, EigMode mode,
                     bool selective, Rng& rng, const EpSettings& settings) {
  EigEvaluator evaluator(state, mode, nullptr, settings);
  return evaluator.matrix(selective, rng);
}

}  // namespace asap
