#include "asap/trajectory_io.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "asap/metrics.hpp"

namespace asap {
namespace {

std::vector<RunTrajectory> sample_runs() {
  std::vector<RunTrajectory> runs;
  for (std::size_t r = 0; r < 2; ++r) {
    RunTrajectory t{"asap", r, {}, {}};
    for (std::size_t k = 1; k <= 3; ++k) {
      CheckpointMetrics p;
      p.standard_trials = static_cast<double>(k);
      p.comparisons = 190 * k;
      p.rmse = 1.0 / (static_cast<double>(k) + 0.1 * r);
      p.srocc = 0.9 + 0.01 * k;
      p.srocc_fisher = fisher_transform(p.srocc);
      p.eig_evaluated_fraction = 1.0 / 3.0;
      t.points.push_back(p);
    }
    runs.push_back(t);
  }
  RunTrajectory plain{"random", 0, {}, {}};
  CheckpointMetrics p;
  p.standard_trials = 0.5;
  p.comparisons = 95;
  p.rmse = 0.1 + 0.2;
  plain.points.push_back(p);
  runs.push_back(plain);
  return runs;
}

std::vector<RunTrajectory> read(const std::string& text) {
  std::istringstream in(text);
  return read_trajectory_csv(in);
}

std::string read_error(const std::string& text) {
  try {
    read(text);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return {};
}

TEST(FormatNumberTest, ShortestRoundTrip) {
  EXPECT_EQ(format_number(0.5), "0.5");
  EXPECT_EQ(format_number(15.0), "15");
  EXPECT_EQ(format_number(0.1 + 0.2), "0.30000000000000004");
  EXPECT_EQ(format_number(1e-300), "1e-300");
}

TEST(TrajectoryCsvTest, HeaderAndEmptyFractionColumn) {
  const auto csv = trajectory_csv(sample_runs());
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "method,run,standard_trials,comparisons,rmse,srocc,srocc_fisher,"
            "eig_evaluated_fraction");
  EXPECT_NE(csv.find("\nrandom,0,0.5,95,0.30000000000000004,0,0,\n"), std::string::npos);
}

TEST(TrajectoryCsvTest, RoundTripsBitExactly) {
  const auto runs = sample_runs();
  const auto back = read(trajectory_csv(runs));
  ASSERT_EQ(back.size(), runs.size());
  for (std::size_t r = 0; r < runs.size(); ++r) {
    EXPECT_EQ(back[r].method, runs[r].method);
    EXPECT_EQ(back[r].run, runs[r].run);
    ASSERT_EQ(back[r].points.size(), runs[r].points.size());
    for (std::size_t k = 0; k < runs[r].points.size(); ++k) {
      const auto& a = runs[r].points[k];
      const auto& b = back[r].points[k];
      EXPECT_EQ(a.rmse, b.rmse);
      EXPECT_EQ(a.srocc_fisher, b.srocc_fisher);
      EXPECT_EQ(a.comparisons, b.comparisons);
      EXPECT_EQ(a.eig_evaluated_fraction, b.eig_evaluated_fraction);
    }
  }
  EXPECT_EQ(trajectory_csv(back), trajectory_csv(runs));
}

TEST(TrajectoryCsvTest, ColumnsMayBeReordered) {
  const auto runs = read(
      "rmse,method,run,standard_trials,comparisons,srocc,srocc_fisher,eig_evaluated_fraction\n"
      "0.25,x,3,1,10,0.5,0.549,\n");
  ASSERT_EQ(runs.size(), 1u);
  EXPECT_EQ(runs[0].method, "x");
  EXPECT_EQ(runs[0].run, 3u);
  EXPECT_EQ(runs[0].points[0].rmse, 0.25);
}

TEST(TrajectoryCsvTest, ReportsMalformedInput) {
  EXPECT_EQ(read_error(""), "trajectory file is empty");
  EXPECT_EQ(read_error("method,run,standard_trials,comparisons,rmse,srocc\n"),
            "trajectory is missing column 'srocc_fisher'");
  const std::string header =
      "method,run,standard_trials,comparisons,rmse,srocc,srocc_fisher,eig_evaluated_fraction\n";
  EXPECT_EQ(read_error(header), "trajectory file has no data rows");
  EXPECT_EQ(read_error(header + "a,0,1,10,0.2,0.9\n"), "line 2: expected 8 fields, got 6");
  EXPECT_EQ(read_error(header + "a,0,1,10,bad,0.9,1,\n"),
            "line 2: column rmse is not a number: 'bad'");
}

TEST(WriteFileAtomicTest, ReplacesContentAndLeavesNoTemporary) {
  const auto dir = std::filesystem::temp_directory_path() / "asap_atomic_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "out.csv";
  write_file_atomic(path, "first");
  write_file_atomic(path, "second");
  std::ifstream in(path);
  std::string content((std::istreambuf_iterator<char>(in)), {});
  EXPECT_EQ(content, "second");
  EXPECT_FALSE(std::filesystem::exists(dir / "out.csv.tmp"));
  std::filesystem::remove_all(dir);
}

TEST(SummaryJsonTest, ContainsSettingsAndStatistics) {
  SimulationConfig cfg;
  cfg.methods = parse_methods("asap,random");
  cfg.seed = 5;
  const auto summary = aggregate(sample_runs());
  const auto j = nlohmann::json::parse(summary_json(summary, {cfg, std::nullopt}));
  EXPECT_EQ(j["settings"]["n"], 20);
  EXPECT_EQ(j["settings"]["range"], "medium");
  EXPECT_EQ(j["settings"]["seed"], 5);
  ASSERT_EQ(j["methods"].size(), 2u);
  EXPECT_EQ(j["methods"][0]["method"], "asap");
  const auto& p = j["methods"][0]["points"][0];
  EXPECT_EQ(p["runs"], 2);
  EXPECT_TRUE(p["rmse"].contains("p12_5"));
  EXPECT_TRUE(p.contains("eig_evaluated_fraction"));
  EXPECT_FALSE(j["methods"][1]["points"][0].contains("eig_evaluated_fraction"));
  EXPECT_FALSE(nlohmann::json::parse(summary_json(summary)).contains("settings"));
}

MethodSummary curve(std::initializer_list<std::pair<std::size_t, double>> pts) {
  MethodSummary s{"m", {}};
  for (auto [c, r] : pts) {
    AggregatePoint p;
    p.comparisons = c;
    p.rmse.mean = r;
    s.points.push_back(p);
  }
  return s;
}

TEST(EffortTest, FormulaMatchesReferenceFigure) {
  EXPECT_DOUBLE_EQ(effort_hours(7065, 5.0), 9.8125);
  EXPECT_NEAR(effort_hours(7065, 5.0), 9.8, 0.05);
}

TEST(EffortTest, InterpolatesBetweenCheckpoints) {
  const auto e = estimate_effort(curve({{100, 0.5}, {200, 0.3}, {300, 0.1}}), 0.2, 5.0);
  ASSERT_TRUE(e.comparisons.has_value());
  EXPECT_DOUBLE_EQ(*e.comparisons, 250.0);
  EXPECT_DOUBLE_EQ(*e.hours, 250.0 * 5.0 / 3600.0);
  EXPECT_EQ(e.method, "m");
}

TEST(EffortTest, FirstCheckpointAndUnreachedTargets) {
  const auto first = estimate_effort(curve({{100, 0.1}, {200, 0.05}}), 0.15, 5.0);
  EXPECT_DOUBLE_EQ(*first.comparisons, 100.0);
  const auto never = estimate_effort(curve({{100, 0.5}, {200, 0.4}}), 0.15, 5.0);
  EXPECT_FALSE(never.comparisons.has_value());
  EXPECT_FALSE(never.hours.has_value());
}

TEST(EffortTest, ExactCheckpointHit) {
  const auto e = estimate_effort(curve({{3000, 0.3}, {7065, 0.15}}), 0.15, 5.0);
  EXPECT_DOUBLE_EQ(*e.comparisons, 7065.0);
  EXPECT_DOUBLE_EQ(*e.hours, 9.8125);
}

}  // namespace
}  // namespace asap
