#include "asap/types.hpp"

#include <cmath>
#include <string>

namespace asap {

void ModelConfig::validate() const {
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw std::invalid_argument("beta must be positive and finite");
  }
  if (!(prior_variance > 0.0) || !std::isfinite(prior_variance)) {
    throw std::invalid_argument("prior_variance must be positive and finite");
  }
  if (!std::isfinite(prior_mean)) {
    throw std::invalid_argument("prior_mean must be finite");
  }
}

ScorePosterior ScorePosterior::prior(std::size_t n, const ModelConfig& config) {
  return ScorePosterior(std::vector<GaussianScore>(
      n, GaussianScore{config.prior_mean, config.prior_variance}));
}

std::vector<double> ScorePosterior::means() const {
  std::vector<double> out;
  out.reserve(scores.size());
  for (const auto& s : scores) out.push_back(s.mean);
  return out;
}

std::size_t pairs_per_standard_trial(std::size_t n) {
  return n < 2 ? 0 : n * (n - 1) / 2;
}

double standard_trials(std::size_t n, std::size_t num_comparisons) {
  if (n < 2) throw std::invalid_argument("n must be >= 2");
  return static_cast<double>(num_comparisons) /
         static_cast<double>(pairs_per_standard_trial(n));
}

ExperimentState::ExperimentState(std::size_t n, ModelConfig config)
    : n_(n), config_(config), posterior_(ScorePosterior::prior(n, config)) {
  if (n < 2) throw std::invalid_argument("n must be >= 2");
  config_.validate();
}

double ExperimentState::standard_trials() const {
  return asap::standard_trials(n_, history_.size());
}

const ComparisonRecord& ExperimentState::append(std::size_t first,
                                                std::size_t second,
                                                int outcome) {
  ComparisonRecord record{history_.size(), first, second, outcome};
  validate_record(record, n_);
  history_.push_back(record);
  stale_ = true;
  return history_.back();
}

void ExperimentState::set_posterior(ScorePosterior posterior) {
  if (posterior.size() != n_) {
    throw std::invalid_argument("posterior length does not match n");
  }
  posterior_ = std::move(posterior);
  stale_ = false;
}

void validate_record(const ComparisonRecord& r, std::size_t n) {
  const std::string where = "trial " + std::to_string(r.trial_index) + ": ";
  if (r.first >= n || r.second >= n) {
    throw ValidationError(where + "condition index out of range (n=" +
                          std::to_string(n) + ")");
  }
  if (r.first == r.second) {
    throw ValidationError(where + "self-comparison of condition " +
                          std::to_string(r.first));
  }
  if (r.outcome != kFirstPreferred && r.outcome != kSecondPreferred) {
    throw ValidationError(where + "invalid outcome " +
                          std::to_string(r.outcome) + " (expected +1 or -1)");
  }
}

void validate_history(std::span<const ComparisonRecord> history,
                      std::size_t n) {
  for (std::size_t t = 0; t < history.size(); ++t) {
    validate_record(history[t], n);
    if (history[t].trial_index != t) {
      throw ValidationError("trial " + std::to_string(history[t].trial_index) +
                            ": trial indices must increase from 0 (expected " +
                            std::to_string(t) + ")");
    }
  }
}

void validate_history(const ExperimentState& state) {
  validate_history(state.history(), state.n());
}

}  // namespace asap
