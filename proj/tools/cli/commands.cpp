#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "asap/ground_truth.hpp"
#include "asap/inference.hpp"
#include "asap/service/http_api.hpp"
#include "asap/service/session_manager.hpp"
#include "asap/simulation.hpp"
#include "asap/trajectory_io.hpp"

namespace asap::cli {

namespace {

namespace fs = std::filesystem;

std::atomic<bool> g_interrupted{false};

extern "C" void on_interrupt(int) { g_interrupted.store(true); }

// Raised for flag values that parse but are invalid together.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SimulateFlags {
  std::size_t n = 20;
  std::string range = "medium";
  std::size_t runs = 100;
  double trials = 15.0;
  std::string checkpoints;
  std::string methods = "asap,asap_approx,random";
  std::uint64_t seed = 0;
  std::string out;
  std::string replay;
  double beta = 1.0;
  std::size_t jobs = 1;
};

struct ScaleFlags {
  std::string matrix;
  std::string out;
  double beta = 1.0;
};

struct AnalyzeFlags {
  std::string trajectory;
  double target_rmse = 0.15;
  double seconds_per_comparison = 5.0;
  std::string out;
};

struct ServeFlags {
  std::string host = "0.0.0.0";
  int port = 8080;
  std::string static_dir;
  std::string log = "sessions.jsonl";
};

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> values;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw UsageError("not a number in list: '" + item + "'");
    values.push_back(v);
  }
  return values;
}

fs::path summary_path_for(const fs::path& out) {
  fs::path p = out;
  p.replace_extension(".summary.json");
  return p;
}

int cmd_simulate(const SimulateFlags& f, bool seed_given, std::ostream& out,
                 std::ostream& err) {
  SimulationConfig config;
  std::optional<CountMatrix> replay;
  try {
    config.n = f.n;
    config.runs = f.runs;
    config.max_standard_trials = f.trials;
    config.range = ScoreRange::parse(f.range);
    config.methods = parse_methods(f.methods);
    config.checkpoints = parse_number_list(f.checkpoints);
    config.model.beta = f.beta;
    config.jobs = f.jobs;
    config.seed = f.seed;
    if (const char* env = std::getenv("ASAP_SEED"); env != nullptr && *env != '\0') {
      std::size_t used = 0;
      const std::string text(env);
      try {
        config.seed = std::stoull(text, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != text.size()) throw UsageError("ASAP_SEED is not an integer: '" + text + "'");
      if (seed_given && config.seed != f.seed) {
        err << "note: ASAP_SEED=" << config.seed << " overrides --seed " << f.seed << "\n";
      }
    }
    if (f.replay.empty()) config.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  if (!f.replay.empty()) {
    try {
      replay = load_comparison_matrix(f.replay);
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return kExitFailure;
    }
  }

  SimulationResult result;
  try {
    result = run_experiment(config, replay);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }

  if (replay) config.n = replay->n();
  SummaryContext context{config, f.replay.empty() ? std::nullopt
                                                  : std::optional<std::string>(f.replay)};
  const fs::path csv_path = f.out;
  const fs::path json_path = summary_path_for(csv_path);
  try {
    write_file_atomic(csv_path, trajectory_csv(result.runs));
    write_file_atomic(json_path, summary_json(result.summary, context));
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }

  std::size_t failed = 0;
  for (const auto& r : result.runs) {
    if (!r.error.empty()) {
      err << "error: " << r.error << "\n";
      ++failed;
    }
  }
  out << "wrote " << csv_path.string() << " and " << json_path.string() << " ("
      << result.runs.size() << " runs, seed " << config.seed << ")\n";
  return failed == 0 ? kExitOk : kExitFailure;
}

int cmd_scale(const ScaleFlags& f, std::ostream& out, std::ostream& err) {
  ModelConfig model;
  model.beta = f.beta;
  try {
    model.validate();
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  CountMatrix counts;
  try {
    counts = load_comparison_matrix(f.matrix);
  } catch (const std::exception& e) {
    err << "error: " << f.matrix << ": " << e.what() << "\n";
    return kExitFailure;
  }
  if (counts.total() == 0) {
    err << "warning: matrix has no comparisons; emitting prior scores\n";
  }
  InferenceResult fit;
  try {
    fit = full_posterior(expand_to_history(counts), counts.n(), model);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }

  nlohmann::ordered_json doc;
  nlohmann::ordered_json scores = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < counts.n(); ++i) {
    scores.push_back({{"index", i},
                      {"mean", fit.posterior[i].mean},
                      {"variance", fit.posterior[i].variance}});
  }
  doc["conditions"] = scores;
  doc["comparisons"] = counts.total();
  doc["beta"] = model.beta;
  doc["converged"] = fit.report.converged;
  doc["sweeps"] = fit.report.sweeps;
  const std::string text = doc.dump(2) + "\n";
  if (!fit.report.converged) {
    err << "warning: inference stopped after " << fit.report.sweeps
        << " sweeps without converging\n";
  }
  if (f.out.empty()) {
    out << text;
    return kExitOk;
  }
  try {
    write_file_atomic(f.out, text);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

int cmd_analyze(const AnalyzeFlags& f, std::ostream& out, std::ostream& err) {
  if (!(f.target_rmse > 0.0) || !(f.seconds_per_comparison > 0.0)) {
    throw UsageError("target-rmse and seconds-per-comparison must be positive");
  }
  std::vector<RunTrajectory> runs;
  try {
    runs = load_trajectory_csv(f.trajectory);
  } catch (const std::exception& e) {
    err << "error: " << f.trajectory << ": " << e.what() << "\n";
    return kExitFailure;
  }
  const auto summary = aggregate(runs);

  out << "target_rmse: " << format_number(f.target_rmse) << "\n"
      << "seconds_per_comparison: " << format_number(f.seconds_per_comparison) << "\n";
  nlohmann::ordered_json efforts = nlohmann::ordered_json::array();
  for (const auto& m : summary) {
    const auto e = estimate_effort(m, f.target_rmse, f.seconds_per_comparison);
    const auto& last = m.points.back();
    out << m.method << ": final rmse " << format_number(last.rmse.mean) << ", srocc "
        << format_number(last.srocc.mean) << " at " << format_number(last.standard_trials)
        << " standard trials; ";
    if (e.comparisons) {
      std::ostringstream hours;
      hours << std::fixed << std::setprecision(1) << *e.hours;
      out << "target reached at " << format_number(*e.comparisons) << " comparisons, effort "
          << hours.str() << " h\n";
      efforts.push_back({{"method", m.method},
                         {"comparisons", *e.comparisons},
                         {"hours", *e.hours}});
    } else {
      out << "target not reached\n";
      efforts.push_back({{"method", m.method}, {"comparisons", nullptr}, {"hours", nullptr}});
    }
  }
  if (!f.out.empty()) {
    auto doc = nlohmann::ordered_json::parse(summary_json(summary));
    doc["effort"] = {{"target_rmse", f.target_rmse},
                     {"seconds_per_comparison", f.seconds_per_comparison},
                     {"methods", efforts}};
    try {
      write_file_atomic(f.out, doc.dump(2) + "\n");
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return kExitFailure;
    }
  }
  return kExitOk;
}

int cmd_serve(const ServeFlags& f, std::ostream& out, std::ostream& err) {
  if (f.port < 0 || f.port > 65535) throw UsageError("port must be in 0..65535");
  std::unique_ptr<service::SessionManager> sessions;
  try {
    std::optional<fs::path> log;
    if (!f.log.empty()) log = fs::path(f.log);
    sessions = std::make_unique<service::SessionManager>(log);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }

  service::HttpOptions options;
  options.host = f.host;
  options.port = f.port;
  if (!f.static_dir.empty()) options.static_dir = fs::path(f.static_dir);

  std::unique_ptr<service::HttpApi> api;
  int port = 0;
  try {
    api = std::make_unique<service::HttpApi>(*sessions, options);
    port = api->bind();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }

  g_interrupted.store(false);
  const auto old_int = std::signal(SIGINT, on_interrupt);
  const auto old_term = std::signal(SIGTERM, on_interrupt);
  std::thread watcher([&] {
    while (!g_interrupted.load()) {
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    api->stop();
  });

  out << "listening on " << f.host << ":" << port;
  if (!f.log.empty()) out << " (sessions: " << sessions->size() << " restored from " << f.log << ")";
  out << std::endl;
  api->listen();

  g_interrupted.store(true);
  watcher.join();
  std::signal(SIGINT, old_int);
  std::signal(SIGTERM, old_term);
  // Events are synced on every append, so the log is complete at this point.
  out << "stopped" << std::endl;
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Active sampling for pairwise comparison experiments", "asap"};
  app.require_subcommand(1);

  SimulateFlags sim;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo evaluation of samplers");
  simulate->add_option("--n", sim.n, "Number of conditions")->capture_default_str();
  simulate->add_option("--range", sim.range, "Score range: small, medium, large or lo:hi")
      ->capture_default_str();
  simulate->add_option("--runs", sim.runs, "Monte Carlo runs")->capture_default_str();
  simulate->add_option("--trials", sim.trials, "Standard trials per run")
      ->capture_default_str();
  simulate->add_option("--checkpoints", sim.checkpoints,
                       "Comma-separated standard-trial checkpoints (default 1..trials)");
  simulate->add_option("--methods", sim.methods, "Comma-separated method labels")
      ->capture_default_str();
  auto* seed_opt =
      simulate->add_option("--seed", sim.seed, "Master seed (ASAP_SEED overrides)")
          ->capture_default_str();
  simulate->add_option("--out", sim.out, "Trajectory CSV path")->required();
  simulate->add_option("--replay", sim.replay, "Comparison-count matrix to sample from");
  simulate->add_option("--beta", sim.beta, "Observer noise scale")->capture_default_str();
  simulate->add_option("--jobs", sim.jobs, "Worker threads")->capture_default_str();

  ScaleFlags sc;
  auto* scale = app.add_subcommand("scale", "Scale a comparison-count matrix");
  scale->add_option("--matrix", sc.matrix, "CSV count matrix")->required();
  scale->add_option("--out", sc.out, "Output JSON (default stdout)");
  scale->add_option("--beta", sc.beta, "Observer noise scale")->capture_default_str();

  AnalyzeFlags an;
  auto* analyze = app.add_subcommand("analyze", "Summarize a trajectory CSV");
  analyze->add_option("--trajectory", an.trajectory, "Trajectory CSV")->required();
  analyze->add_option("--target-rmse", an.target_rmse, "RMSE target for effort")
      ->capture_default_str();
  analyze->add_option("--seconds-per-comparison", an.seconds_per_comparison,
                      "Time per comparison in seconds")
      ->capture_default_str();
  analyze->add_option("--out", an.out, "Write the summary JSON here");

  ServeFlags sv;
  auto* serve = app.add_subcommand("serve", "Run the live experiment HTTP API");
  serve->add_option("--host", sv.host, "Bind address")->capture_default_str();
  serve->add_option("--port", sv.port, "TCP port (0 picks a free one)")
      ->capture_default_str();
  serve->add_option("--static", sv.static_dir, "Directory of static files to serve");
  serve->add_option("--log", sv.log, "Session event log (empty: in memory only)")
      ->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    CLI::App* target = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    out << target->help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    CLI::App* target = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << target->help();
    return kExitUsage;
  }

  CLI::App* active = app.get_subcommands().front();
  try {
    if (active == simulate) {
      if (!sim.replay.empty() && (simulate->count("--n") || simulate->count("--range"))) {
        throw UsageError("--replay takes n from the matrix; drop --n and --range");
      }
      return cmd_simulate(sim, seed_opt->count() > 0, out, err);
    }
    if (active == scale) return cmd_scale(sc, out, err);
    if (active == analyze) return cmd_analyze(an, out, err);
    return cmd_serve(sv, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n" << active->help();
    return kExitUsage;
  }
}

}  // namespace asap::cli
