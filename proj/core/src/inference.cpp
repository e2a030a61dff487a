#include "asap/inference.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace asap {

namespace {

constexpr double kFallbackDamping = 0.5;
// Consecutive sweeps whose mean updates point in opposite directions before
// damping switches on.
constexpr int kOscillationSweeps = 3;

struct NumericalFailure {};

NaturalGaussian scaled(const NaturalGaussian& g, double k) {
  return {g.precision * k, g.shifted_mean * k};
}

}  // namespace

void EpSettings::validate() const {
  if (max_sweeps == 0) throw std::invalid_argument("max_sweeps must be > 0");
  if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be > 0");
  if (!(trial_tolerance > 0.0)) {
    throw std::invalid_argument("trial_tolerance must be > 0");
  }
  if (!(damping >= 0.0 && damping < 1.0)) {
    throw std::invalid_argument("damping must lie in [0, 1)");
  }
}

FactorGraph::FactorGraph(std::size_t n, ModelConfig config, bool group_identical)
    : config_(config),
      group_identical_(group_identical),
      prior_(NaturalGaussian::from_moments(config.prior_mean,
                                           config.prior_variance)),
      marginals_(n, prior_),
      mean_(n, config.prior_mean),
      var_(n, config.prior_variance),
      dirty_(n, 0),
      touched_(n, 0) {
  if (n < 2) throw std::invalid_argument("n must be >= 2");
  config_.validate();
}

std::uint64_t FactorGraph::key(std::size_t a, std::size_t b, int sign) const {
  return ((static_cast<std::uint64_t>(a) * n() + b) << 1) | (sign > 0 ? 1 : 0);
}

void FactorGraph::journal(std::size_t g) {
  if (!in_trial_ || g >= trial_groups_ || stamp_[g] == epoch_) return;
  stamp_[g] = epoch_;
  journal_.emplace_back(static_cast<std::uint32_t>(g), groups_[g]);
}

void FactorGraph::set_marginal(std::size_t i, NaturalGaussian m) {
  marginals_[i] = m;
  mean_[i] = m.mean();
  var_[i] = m.variance();
}

void FactorGraph::add_comparison(std::size_t first, std::size_t second,
                                 int outcome) {
  add_comparison(ComparisonRecord{num_comparisons_, first, second, outcome});
}

void FactorGraph::add_comparison(const ComparisonRecord& record) {
  validate_record(record, n());
  const std::size_t a = std::min(record.first, record.second);
  const std::size_t b = std::max(record.first, record.second);
  const int sign = record.first < record.second ? record.outcome : -record.outcome;
  ++num_comparisons_;
  dirty_[a] = dirty_[b] = 1;

  if (group_identical_) {
    const std::uint64_t k = key(a, b, sign);
    if (auto it = index_.find(k); it != index_.end()) {
      // The extra copy starts from the message its siblings already carry.
      Factor& f = groups_[it->second];
      journal(it->second);
      ++f.count;
      set_marginal(a, marginals_[a] * f.to_a);
      set_marginal(b, marginals_[b] * f.to_b);
      return;
    }
    index_.emplace(k, static_cast<std::uint32_t>(groups_.size()));
    if (in_trial_) trial_keys_.push_back(k);
  }
  Factor f;
  f.a = static_cast<std::uint32_t>(a);
  f.b = static_cast<std::uint32_t>(b);
  f.sign = sign;
  f.count = 1;
  groups_.push_back(f);
}

bool FactorGraph::update(std::size_t g, double damping, double tolerance) {
  journal(g);
  Factor& f = groups_[g];
  const NaturalGaussian cav_a = marginals_[f.a] / f.to_a;
  const NaturalGaussian cav_b = marginals_[f.b] / f.to_b;
  if (!(cav_a.precision > 0.0) || !(cav_b.precision > 0.0)) return false;

  const double mu_a = cav_a.mean();
  const double var_a = cav_a.variance();
  const double mu_b = cav_b.mean();
  const double var_b = cav_b.variance();
  const double beta2 = config_.beta * config_.beta;
  const double c2 = var_a + var_b + 2.0 * beta2;
  const double c = std::sqrt(c2);
  const double s = static_cast<double>(f.sign);
  const auto [v, w] = truncated_gaussian_moments(s * (mu_a - mu_b) / c);

  const double new_mu_a = mu_a + s * var_a / c * v;
  const double new_var_a = var_a * (1.0 - var_a / c2 * w);
  const double new_mu_b = mu_b - s * var_b / c * v;
  const double new_var_b = var_b * (1.0 - var_b / c2 * w);
  if (!(new_var_a > 0.0) || !(new_var_b > 0.0) || !std::isfinite(new_mu_a) ||
      !std::isfinite(new_mu_b)) {
    return false;
  }

  auto next_message = [&](double mu, double var, const NaturalGaussian& cavity,
                          const NaturalGaussian& old) {
    NaturalGaussian m = NaturalGaussian::from_moments(mu, var) / cavity;
    if (m.precision < 0.0) m = {};
    if (damping > 0.0) {
      m = {(1.0 - damping) * m.precision + damping * old.precision,
           (1.0 - damping) * m.shifted_mean + damping * old.shifted_mean};
    }
    return m;
  };
  const NaturalGaussian msg_a = next_message(new_mu_a, new_var_a, cav_a, f.to_a);
  const NaturalGaussian msg_b = next_message(new_mu_b, new_var_b, cav_b, f.to_b);

  const double k = static_cast<double>(f.count);
  auto apply = [&](std::uint32_t i, const NaturalGaussian& msg,
                   const NaturalGaussian& old) {
    const double old_mean = mean_[i];
    const double old_var = var_[i];
    NaturalGaussian m = k == 1.0 ? (marginals_[i] / old) * msg
                                 : marginals_[i] * scaled(msg / old, k);
    if (!(m.precision > 0.0)) return false;
    set_marginal(i, m);
    if (std::fabs(mean_[i] - old_mean) > tolerance ||
        std::fabs(var_[i] - old_var) > tolerance) {
      touched_[i] = 1;
    }
    return std::isfinite(mean_[i]);
  };
  const bool ok = apply(f.a, msg_a, f.to_a) && apply(f.b, msg_b, f.to_b);
  f.to_a = msg_a;
  f.to_b = msg_b;
  return ok;
}

void FactorGraph::reset_messages() {
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    journal(g);
    groups_[g].to_a = {};
    groups_[g].to_b = {};
  }
  for (std::size_t i = 0; i < n(); ++i) {
    set_marginal(i, prior_);
    dirty_[i] = 1;
  }
}

InferenceReport FactorGraph::run_once(const EpSettings& settings, bool verify,
                                      double damping) {
  InferenceReport report;
  report.converged = false;
  const std::size_t n_scores = n();
  std::vector<double> start_mean(n_scores), start_var(n_scores);
  std::vector<double> prev_delta(n_scores, 0.0);
  bool have_prev = false;
  int oscillation_streak = 0;
  bool full_sweep = false;

  for (std::size_t sweep = 0; sweep < settings.max_sweeps; ++sweep) {
    std::copy(mean_.begin(), mean_.end(), start_mean.begin());
    std::copy(var_.begin(), var_.end(), start_var.begin());
    std::fill(touched_.begin(), touched_.end(), 0);
    bool processed_all = true;

    auto visit = [&](std::size_t g) {
      const Factor& f = groups_[g];
      if (!full_sweep && !dirty_[f.a] && !dirty_[f.b] && !touched_[f.a] &&
          !touched_[f.b]) {
        processed_all = false;
        return;
      }
      if (!update(g, damping, settings.tolerance)) throw NumericalFailure{};
    };
    if (sweep % 2 == 0) {
      for (std::size_t g = 0; g < groups_.size(); ++g) visit(g);
    } else {
      for (std::size_t g = groups_.size(); g-- > 0;) visit(g);
    }

    double max_change = 0.0;
    double dot = 0.0;
    for (std::size_t i = 0; i < n_scores; ++i) {
      const double dm = mean_[i] - start_mean[i];
      max_change = std::max({max_change, std::fabs(dm),
                             std::fabs(var_[i] - start_var[i])});
      dot += dm * prev_delta[i];
      prev_delta[i] = dm;
    }
    report.sweeps = sweep + 1;
    report.max_change = max_change;
    dirty_.swap(touched_);

    oscillation_streak = (have_prev && dot < 0.0) ? oscillation_streak + 1 : 0;
    have_prev = true;
    if (oscillation_streak >= kOscillationSweeps && damping == 0.0) {
      damping = kFallbackDamping;
    }

    if (max_change <= settings.tolerance) {
      if (!verify || processed_all) {
        report.converged = true;
        break;
      }
      full_sweep = true;
    } else {
      full_sweep = false;
    }
  }
  report.damping = damping;
  return report;
}

InferenceReport FactorGraph::run(const EpSettings& settings, bool verify) {
  settings.validate();
  if (groups_.empty()) return {};
  try {
    return run_once(settings, verify, settings.damping);
  } catch (const NumericalFailure&) {
  }
  reset_messages();
  try {
    return run_once(settings, verify,
                    std::max(settings.damping, kFallbackDamping));
  } catch (const NumericalFailure&) {
    throw InferenceError(
        "EP produced a non-positive variance even with damping " +
        std::to_string(std::max(settings.damping, kFallbackDamping)));
  }
}

ScorePosterior FactorGraph::posterior() const {
  std::vector<GaussianScore> scores(n());
  for (std::size_t i = 0; i < n(); ++i) scores[i] = {mean_[i], var_[i]};
  return ScorePosterior(std::move(scores));
}

void FactorGraph::begin_trial() {
  if (in_trial_) throw std::logic_error("begin_trial: trial already open");
  in_trial_ = true;
  if (++epoch_ == 0) {
    std::fill(stamp_.begin(), stamp_.end(), 0);
    epoch_ = 1;
  }
  trial_groups_ = groups_.size();
  trial_comparisons_ = num_comparisons_;
  stamp_.resize(trial_groups_, 0);
  journal_.clear();
  trial_keys_.clear();
  saved_marginals_ = marginals_;
  saved_mean_ = mean_;
  saved_var_ = var_;
  saved_dirty_ = dirty_;
}

void FactorGraph::rollback() {
  if (!in_trial_) throw std::logic_error("rollback: no open trial");
  for (const auto& [g, f] : journal_) groups_[g] = f;
  groups_.resize(trial_groups_);
  for (std::uint64_t k : trial_keys_) index_.erase(k);
  marginals_.swap(saved_marginals_);
  mean_.swap(saved_mean_);
  var_.swap(saved_var_);
  dirty_.swap(saved_dirty_);
  num_comparisons_ = trial_comparisons_;
  journal_.clear();
  trial_keys_.clear();
  in_trial_ = false;
}

InferenceResult full_posterior(std::span<const ComparisonRecord> history,
                               std::size_t n, const ModelConfig& config,
                               const EpSettings& settings) {
  validate_history(history, n);
  FactorGraph graph(n, config, settings.group_identical_comparisons);
  for (const auto& r : history) graph.add_comparison(r);
  InferenceResult result;
  result.report = graph.run(settings);
  result.posterior = graph.posterior();
  return result;
}

std::pair<GaussianScore, GaussianScore> adf_update(const GaussianScore& a,
                                                   const GaussianScore& b,
                                                   int sign,
                                                   const ModelConfig& config) {
  const double c2 = a.variance + b.variance + 2.0 * config.beta * config.beta;
  const double c = std::sqrt(c2);
  const double s = sign > 0 ? 1.0 : -1.0;
  const auto [v, w] = truncated_gaussian_moments(s * (a.mean - b.mean) / c);
  GaussianScore na{a.mean + s * a.variance / c * v,
                   a.variance * (1.0 - a.variance / c2 * w)};
  GaussianScore nb{b.mean - s * b.variance / c * v,
                   b.variance * (1.0 - b.variance / c2 * w)};
  if (!(na.variance > 0.0) || !(nb.variance > 0.0)) {
    throw InferenceError("ADF update produced a non-positive variance");
  }
  return {na, nb};
}

ScorePosterior online_update(const ScorePosterior& posterior,
                             const ComparisonRecord& record,
                             const ModelConfig& config) {
  validate_record(record, posterior.size());
  ScorePosterior out = posterior;
  auto [a, b] = adf_update(posterior[record.first], posterior[record.second],
                           record.outcome, config);
  out[record.first] = a;
  out[record.second] = b;
  return out;
}

double outcome_probability(const GaussianScore& i, const GaussianScore& j,
                           const ModelConfig& config) {
  const double sigma_ij =
      std::sqrt(i.variance + j.variance + config.beta * config.beta);
  return normal_cdf((i.mean - j.mean) / (std::numbers::sqrt2 * sigma_ij));
}

PosteriorTracker::PosteriorTracker(std::size_t n, ModelConfig config,
                                   EpSettings settings)
    : graph_(n, config, settings.group_identical_comparisons),
      settings_(settings) {
  settings_.validate();
}

ScorePosterior PosteriorTracker::sync(std::span<const ComparisonRecord> history) {
  if (history.size() < absorbed_) {
    throw std::logic_error("PosteriorTracker: history shrank");
  }
  for (std::size_t t = absorbed_; t < history.size(); ++t) {
    graph_.add_comparison(history[t]);
  }
  absorbed_ = history.size();
  last_report_ = graph_.run(settings_);
  return graph_.posterior();
}

InferenceReport PosteriorTracker::refresh(ExperimentState& state) {
  state.set_posterior(sync(state.history()));
  return last_report_;
}

}  // namespace asap
