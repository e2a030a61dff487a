#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "asap/simulation.hpp"

namespace asap {

// Shortest round-trip decimal representation, locale independent.
std::string format_number(double value);

// Writes `content` to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

// Columns: method,run,standard_trials,comparisons,rmse,srocc,srocc_fisher,
// eig_evaluated_fraction (empty for methods without EIG).
void write_trajectory_csv(std::ostream& out, const std::vector<RunTrajectory>& runs);
std::string trajectory_csv(const std::vector<RunTrajectory>& runs);

// Parses the format above; columns may appear in any order. Throws
// ValidationError naming the missing column or the offending line.
std::vector<RunTrajectory> read_trajectory_csv(std::istream& in);
std::vector<RunTrajectory> load_trajectory_csv(const std::filesystem::path& path);

// Settings echoed into JSON summaries.
struct SummaryContext {
  std::optional<SimulationConfig> config;
  std::optional<std::string> replay_source;
};

std::string summary_json(const std::vector<MethodSummary>& summary,
                         const SummaryContext& context = {});

struct EffortEstimate {
  std::string method;
  double target_rmse = 0.0;
  double seconds_per_comparison = 0.0;
  // Interpolated comparison count at which the mean RMSE first reaches the
  // target; empty when it never does.
  std::optional<double> comparisons;
  std::optional<double> hours;
};

// Linear interpolation of the mean RMSE curve between consecutive
// checkpoints. The curve starts from the first checkpoint; a target met
// there resolves to that checkpoint's comparison count.
EffortEstimate estimate_effort(const MethodSummary& summary, double target_rmse,
                               double seconds_per_comparison);

// Wall-clock hours for a number of comparisons.
double effort_hours(double comparisons, double seconds_per_comparison);

}  // namespace asap
