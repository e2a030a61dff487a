#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "asap/gaussian.hpp"
#include "asap/types.hpp"

namespace asap {

struct EpSettings {
  std::size_t max_sweeps = 100;
  // Converged when no marginal mean or variance moves by more than this in
  // one sweep.
  double tolerance = 1e-6;
  // Tolerance for the hypothetical runs behind an EIG evaluation, which
  // warm-start from a converged graph. The absolute EIG error stays around
  // 1% of the largest gain at 1e-5.
  double trial_tolerance = 1e-5;
  // Weight of the old message when damping, in [0, 1).
  double damping = 0.0;
  // Repeated identical comparisons (same pair, same outcome) share one
  // message slot. The fixed point is the same as with one slot per
  // comparison; sweeps become O(distinct pairs) instead of O(T).
  bool group_identical_comparisons = true;

  void validate() const;
};

struct InferenceReport {
  std::size_t sweeps = 0;
  bool converged = true;
  double max_change = 0.0;  // largest marginal change in the final sweep
  double damping = 0.0;     // damping in effect at the end of the run
};

struct InferenceResult {
  ScorePosterior posterior;
  InferenceReport report;
};

// Factor graph for pairwise comparisons: one score variable and prior factor
// per condition; per comparison a difference factor d = r_first - r_second +
// noise (noise variance 2 beta^2) feeding a sign factor observed at the
// outcome. The difference variable is integrated analytically, so each
// comparison contributes one Gaussian message to each of its two scores;
// sign-factor messages are moment matched (EP).
//
// Messages live in natural parameters with precision >= 0. Sweeps visit
// comparisons in history order, alternating forward and backward. Only
// comparisons touching a score that moved by more than the tolerance are
// revisited, so a converged graph absorbs a new comparison cheaply.
class FactorGraph {
 public:
  FactorGraph(std::size_t n, ModelConfig config, bool group_identical = true);

  std::size_t n() const { return marginals_.size(); }
  const ModelConfig& config() const { return config_; }
  std::size_t num_comparisons() const { return num_comparisons_; }
  std::size_t num_factors() const { return groups_.size(); }

  // Throws ValidationError for an invalid record.
  void add_comparison(const ComparisonRecord& record);
  void add_comparison(std::size_t first, std::size_t second, int outcome);

  // Runs EP sweeps until converged or settings.max_sweeps is reached. With
  // `verify`, convergence additionally requires one full sweep over every
  // factor. A numerical failure restarts once from uninformative messages
  // with damping 0.5, then throws InferenceError.
  InferenceReport run(const EpSettings& settings, bool verify = true);

  GaussianScore marginal(std::size_t i) const { return {mean_[i], var_[i]}; }
  ScorePosterior posterior() const;
  std::span<const double> means() const { return mean_; }
  std::span<const double> variances() const { return var_; }

  // Hypothetical evaluation: every change after begin_trial() (added
  // comparisons, message updates) is undone by rollback().
  void begin_trial();
  void rollback();
  bool in_trial() const { return in_trial_; }

 private:
  struct Factor {
    std::uint32_t a = 0;  // a < b
    std::uint32_t b = 0;
    int sign = 1;         // +1 when a was preferred
    std::uint32_t count = 0;
    NaturalGaussian to_a;  // message of one comparison to r_a
    NaturalGaussian to_b;
  };

  std::uint64_t key(std::size_t a, std::size_t b, int sign) const;
  void journal(std::size_t g);
  void set_marginal(std::size_t i, NaturalGaussian m);
  // Returns false on numerical failure.
  bool update(std::size_t g, double damping, double tolerance);
  void reset_messages();
  InferenceReport run_once(const EpSettings& settings, bool verify,
                           double damping);

  ModelConfig config_;
  bool group_identical_;
  NaturalGaussian prior_;
  std::vector<Factor> groups_;
  std::unordered_map<std::uint64_t, std::uint32_t> index_;
  std::vector<NaturalGaussian> marginals_;
  std::vector<double> mean_;
  std::vector<double> var_;
  std::size_t num_comparisons_ = 0;
  // Scores moved beyond tolerance and not yet propagated.
  std::vector<char> dirty_;
  std::vector<char> touched_;

  bool in_trial_ = false;
  std::uint32_t epoch_ = 0;
  std::vector<std::uint32_t> stamp_;
  std::vector<std::pair<std::uint32_t, Factor>> journal_;
  std::size_t trial_groups_ = 0;
  std::size_t trial_comparisons_ = 0;
  std::vector<std::uint64_t> trial_keys_;
  std::vector<NaturalGaussian> saved_marginals_;
  std::vector<double> saved_mean_;
  std::vector<double> saved_var_;
  std::vector<char> saved_dirty_;
};

// Full EP inference over the whole history; returns the prior for an empty
// history. Non-convergence is reported through report.converged.
InferenceResult full_posterior(std::span<const ComparisonRecord> history,
                               std::size_t n, const ModelConfig& config,
                               const EpSettings& settings = {});

// Assumed-density-filtering step for one comparison between scores a and b
// (a preferred when sign = +1), treating them as the prior.
std::pair<GaussianScore, GaussianScore> adf_update(const GaussianScore& a,
                                                   const GaussianScore& b,
                                                   int sign,
                                                   const ModelConfig& config);

// Returns `posterior` with entries first and second replaced by their ADF
// update; every other entry is copied unchanged.
ScorePosterior online_update(const ScorePosterior& posterior,
                             const ComparisonRecord& record,
                             const ModelConfig& config);

// P(i preferred over j) = Phi((mu_i - mu_j) / (sqrt(2) sigma_ij)) with
// sigma_ij^2 = sigma_i^2 + sigma_j^2 + beta^2.
double outcome_probability(const GaussianScore& i, const GaussianScore& j,
                           const ModelConfig& config);

// Keeps a factor graph in step with an ExperimentState so that refreshing
// after new comparisons warm-starts from the previous fixed point.
class PosteriorTracker {
 public:
  PosteriorTracker(std::size_t n, ModelConfig config, EpSettings settings = {});

  // Absorbs records of state.history() not seen yet, runs EP and installs
  // the posterior in `state`.
  InferenceReport refresh(ExperimentState& state);
  // Same, without touching a state; returns the posterior.
  ScorePosterior sync(std::span<const ComparisonRecord> history);

  FactorGraph& graph() { return graph_; }
  const FactorGraph& graph() const { return graph_; }
  const EpSettings& settings() const { return settings_; }
  const InferenceReport& last_report() const { return last_report_; }
  std::size_t absorbed() const { return absorbed_; }

 private:
  FactorGraph graph_;
  EpSettings settings_;
  std::size_t absorbed_ = 0;
  InferenceReport last_report_;
};

}  // namespace asap
