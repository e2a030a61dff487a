#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "asap/ground_truth.hpp"
#include "asap/inference.hpp"
#include "asap/samplers.hpp"
#include "asap/types.hpp"

namespace asap {

// A sampler configuration under a display label. Labels are a kind name
// optionally followed by modifiers: "asap", "asap+sequential",
// "asap+exhaustive" (no selective EIG), "asap_approx+sequential+exhaustive".
struct MethodSpec {
  std::string label;
  SamplerOptions options;
};

// Throws std::invalid_argument for an unknown kind or modifier.
MethodSpec parse_method(std::string_view label);
std::vector<MethodSpec> parse_methods(std::string_view comma_separated);

struct SimulationConfig {
  std::size_t n = 20;
  ScoreRange range = ScoreRange::medium();
  std::size_t runs = 100;
  double max_standard_trials = 15.0;
  std::vector<MethodSpec> methods;
  std::uint64_t seed = 0;
  // Measurement grid in standard trials; empty means 1, 2, ..., max.
  std::vector<double> checkpoints;
  ModelConfig model;
  EpSettings ep;
  std::size_t jobs = 1;
  // Called with every batch a sampler emits (method label, run, batch).
  std::function<void(const std::string&, std::size_t, const Batch&)> on_batch;

  std::vector<double> resolved_checkpoints() const;
  // Comparison counts at each checkpoint, strictly increasing.
  std::vector<std::size_t> checkpoint_comparisons() const;
  // Throws std::invalid_argument naming the offending field.
  void validate() const;
};

struct CheckpointMetrics {
  double standard_trials = 0.0;
  std::size_t comparisons = 0;
  double rmse = 0.0;
  double srocc = 0.0;
  double srocc_fisher = 0.0;
  // Mean fraction of pairs whose EIG was evaluated since the previous
  // checkpoint; EIG-based methods only.
  std::optional<double> eig_evaluated_fraction;
};

struct RunTrajectory {
  std::string method;
  std::size_t run = 0;
  std::vector<CheckpointMetrics> points;
  std::string error;  // non-empty when the run aborted
};

struct SummaryStat {
  double mean = 0.0;
  double p12_5 = 0.0;
  double p87_5 = 0.0;
  double std_error = 0.0;  // standard error of the mean
};

struct AggregatePoint {
  double standard_trials = 0.0;
  std::size_t comparisons = 0;
  std::size_t runs = 0;
  SummaryStat rmse;
  SummaryStat srocc;
  SummaryStat srocc_fisher;
  std::optional<double> eig_evaluated_fraction;
};

struct MethodSummary {
  std::string method;
  std::vector<AggregatePoint> points;
};

struct SimulationResult {
  std::vector<RunTrajectory> runs;  // ordered by method, then run
  std::vector<MethodSummary> summary;
};

// Scores obtained by scaling every comparison in the matrix.
std::vector<double> replay_reference_scores(const CountMatrix& counts,
                                            const ModelConfig& config,
                                            const EpSettings& settings = {});

// Monte Carlo evaluation. Synthetic mode draws fresh scores per run from
// config.range; replay mode samples outcomes from `replay`, whose size
// overrides config.n. Each run uses streams derived from (seed, run), shared
// by all methods, so methods see the same truth.
SimulationResult run_experiment(const SimulationConfig& config,
                                const std::optional<CountMatrix>& replay = {});

// One run of one method against a fixed truth.
RunTrajectory simulate_run(const SimulationConfig& config, const MethodSpec& method,
                           std::size_t run, const GroundTruth& truth,
                           const std::vector<double>& reference_scores);

// Mean, central 75% band and standard error per checkpoint; Fisher values
// are averaged after transforming each run.
std::vector<MethodSummary> aggregate(const std::vector<RunTrajectory>& runs);

// Linear-interpolated percentile (q in [0, 1]) of unsorted values.
double percentile(std::vector<double> values, double q);

}  // namespace asap
