#include "asap/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <stdexcept>
#include <thread>

#include "asap/metrics.hpp"

namespace asap {

namespace {

// Stream labels for derive_seed(seed, run, stream).
constexpr std::uint64_t kTruthStream = 0;
constexpr std::uint64_t kSamplerStream = 1;
constexpr std::uint64_t kOutcomeStream = 2;

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  while (true) {
    const auto pos = s.find(sep);
    parts.push_back(s.substr(0, pos));
    if (pos == std::string_view::npos) break;
    s = s.substr(pos + 1);
  }
  return parts;
}

CheckpointMetrics measure(const ScorePosterior& posterior,
                          const std::vector<double>& reference,
                          std::size_t n, std::size_t comparisons) {
  CheckpointMetrics m;
  m.comparisons = comparisons;
  m.standard_trials = standard_trials(n, comparisons);
  const std::vector<double> estimate = posterior.means();
  m.rmse = rmse_aligned(estimate, reference);
  try {
    m.srocc = srocc(estimate, reference);
  } catch (const std::domain_error&) {
    // A constant estimate carries no ranking information.
    m.srocc = 0.0;
  }
  m.srocc_fisher = fisher_transform(m.srocc);
  return m;
}

}  // namespace

MethodSpec parse_method(std::string_view label) {
  const auto parts = split(label, '+');
  MethodSpec spec;
  spec.label = std::string(label);
  spec.options.kind = parse_sampler_kind(parts.front());
  for (std::size_t k = 1; k < parts.size(); ++k) {
    const std::string_view mod = parts[k];
    if (mod == "sequential") {
      spec.options.batch = false;
    } else if (mod == "batch" || mod == "mst") {
      spec.options.batch = true;
    } else if (mod == "exhaustive") {
      spec.options.selective = false;
    } else if (mod == "selective") {
      spec.options.selective = true;
    } else {
      throw std::invalid_argument("unknown method modifier '" + std::string(mod) +
                                  "' in '" + std::string(label) + "'");
    }
  }
  return spec;
}

std::vector<MethodSpec> parse_methods(std::string_view comma_separated) {
  std::vector<MethodSpec> out;
  for (auto part : split(comma_separated, ',')) {
    if (!part.empty()) out.push_back(parse_method(part));
  }
  if (out.empty()) throw std::invalid_argument("no methods given");
  return out;
}

std::vector<double> SimulationConfig::resolved_checkpoints() const {
  if (!checkpoints.empty()) return checkpoints;
  std::vector<double> out;
  for (double st = 1.0; st <= max_standard_trials + 1e-9; st += 1.0) out.push_back(st);
  if (out.empty() || out.back() < max_standard_trials - 1e-9) {
    out.push_back(max_standard_trials);
  }
  return out;
}

std::vector<std::size_t> SimulationConfig::checkpoint_comparisons() const {
  std::vector<std::size_t> out;
  const double pairs = static_cast<double>(pairs_per_standard_trial(n));
  for (double st : resolved_checkpoints()) {
    out.push_back(static_cast<std::size_t>(std::llround(st * pairs)));
  }
  return out;
}

void SimulationConfig::validate() const {
  if (n < 2) throw std::invalid_argument("n must be ≥ 2");
  if (runs == 0) throw std::invalid_argument("runs must be >= 1");
  if (!(max_standard_trials > 0.0) || !std::isfinite(max_standard_trials)) {
    throw std::invalid_argument("trials must be positive");
  }
  if (methods.empty()) throw std::invalid_argument("at least one method is required");
  if (!(range.lo < range.hi)) throw std::invalid_argument("range must satisfy lo < hi");
  if (jobs == 0) throw std::invalid_argument("jobs must be >= 1");
  model.validate();
  ep.validate();
  const auto cps = resolved_checkpoints();
  const auto counts = checkpoint_comparisons();
  for (std::size_t k = 0; k < cps.size(); ++k) {
    if (!(cps[k] > 0.0) || cps[k] > max_standard_trials + 1e-9) {
      throw std::invalid_argument("checkpoints must lie in (0, trials]");
    }
    if (counts[k] == 0 || (k > 0 && counts[k] <= counts[k - 1])) {
      throw std::invalid_argument(
          "checkpoints must map to strictly increasing comparison counts");
    }
  }
}

std::vector<double> replay_reference_scores(const CountMatrix& counts,
                                            const ModelConfig& config,
                                            const EpSettings& settings) {
  const auto history = expand_to_history(counts);
  return full_posterior(history, counts.n(), config, settings).posterior.means();
}

RunTrajectory simulate_run(const SimulationConfig& config, const MethodSpec& method,
                           std::size_t run, const GroundTruth& truth,
                           const std::vector<double>& reference_scores) {
  RunTrajectory out;
  out.method = method.label;
  out.run = run;
  const std::size_t n = truth.n();

  SamplerOptions options = method.options;
  options.seed = derive_seed(config.seed, run, kSamplerStream);
  auto sampler = make_sampler(options, config.ep);
  const PosteriorPolicy policy = sampler->policy();
  Rng outcome_rng(derive_seed(config.seed, run, kOutcomeStream));

  ExperimentState state(n, config.model);
  // Selection (full policy) and metrics share one tracker; it only ever
  // absorbs a prefix of the history, so both see the same fixed point.
  PosteriorTracker tracker(n, config.model, config.ep);

  SimulationConfig grid = config;
  grid.n = n;
  const auto targets = grid.checkpoint_comparisons();
  const auto st_targets = grid.resolved_checkpoints();

  std::deque<Pair> queue;
  double fraction_sum = 0.0;
  std::size_t fraction_count = 0;
  std::optional<double> last_fraction;

  try {
    for (std::size_t next = 0; next < targets.size();) {
      if (queue.empty()) {
        if (policy == PosteriorPolicy::full) tracker.refresh(state);
        Batch batch = sampler->select(
            state, policy == PosteriorPolicy::full ? &tracker.graph() : nullptr);
        if (batch.empty()) throw std::logic_error("sampler produced an empty batch");
        if (config.on_batch) config.on_batch(method.label, run, batch);
        if (auto f = sampler->last_eig_fraction()) {
          fraction_sum += *f;
          ++fraction_count;
          last_fraction = f;
        }
        queue.insert(queue.end(), batch.begin(), batch.end());
      }
      const Pair pair = queue.front();
      queue.pop_front();
      const int y = draw_outcome(truth, pair.first, pair.second, config.model,
                                 outcome_rng);
      const ComparisonRecord record = state.append(pair.first, pair.second, y);
      sampler->observe(std::span<const ComparisonRecord>(&record, 1));
      if (policy == PosteriorPolicy::online) {
        state.set_posterior(online_update(state.posterior(), record, config.model));
      }

      if (state.num_comparisons() == targets[next]) {
        CheckpointMetrics m =
            measure(tracker.sync(state.history()), reference_scores, n,
                    state.num_comparisons());
        m.standard_trials = st_targets[next];
        if (fraction_count > 0) {
          m.eig_evaluated_fraction = fraction_sum / static_cast<double>(fraction_count);
        } else {
          m.eig_evaluated_fraction = last_fraction;
        }
        fraction_sum = 0.0;
        fraction_count = 0;
        out.points.push_back(m);
        ++next;
      }
    }
  } catch (const std::exception& e) {
    out.error = std::string("run ") + std::to_string(run) + " (" + method.label +
                ") aborted after " + std::to_string(state.num_comparisons()) +
                " comparisons: " + e.what();
  }
  return out;
}

SimulationResult run_experiment(const SimulationConfig& config,
                                 const std::optional<CountMatrix>& replay) {
  SimulationConfig cfg = config;
  std::vector<double> replay_reference;
  std::optional<GroundTruth> replay_truth;
  if (replay) {
    if (!replay->complete()) {
      throw ValidationError("replay matrix is incomplete: every pair needs an observation");
    }
    cfg.n = replay->n();
    replay_reference = replay_reference_scores(*replay, cfg.model, cfg.ep);
    replay_truth.emplace(*replay);
  }
  cfg.validate();

  const std::size_t tasks = cfg.methods.size() * cfg.runs;
  SimulationResult result;
  result.runs.resize(tasks);

  auto run_task = [&](std::size_t task) {
    const std::size_t m = task / cfg.runs;
    const std::size_t run = task % cfg.runs;
    if (replay_truth) {
      result.runs[task] =
          simulate_run(cfg, cfg.methods[m], run, *replay_truth, replay_reference);
    } else {
      Rng truth_rng(derive_seed(cfg.seed, run, kTruthStream));
      std::vector<double> scores = draw_scores(cfg.n, cfg.range, truth_rng);
      const GroundTruth truth(scores);
      result.runs[task] = simulate_run(cfg, cfg.methods[m], run, truth, scores);
    }
  };

  if (cfg.jobs <= 1 || tasks <= 1) {
    for (std::size_t t = 0; t < tasks; ++t) run_task(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < std::min(cfg.jobs, tasks); ++w) {
      workers.emplace_back([&] {
        for (std::size_t t; (t = next.fetch_add(1)) < tasks;) run_task(t);
      });
    }
    for (auto& w : workers) w.join();
  }
  result.summary = aggregate(result.runs);
  return result;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("percentile of empty set");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<MethodSummary> aggregate(const std::vector<RunTrajectory>& runs) {
  std::vector<MethodSummary> out;
  auto summary_for = [&](const std::string& method) -> MethodSummary& {
    for (auto& s : out) {
      if (s.method == method) return s;
    }
    out.push_back(MethodSummary{method, {}});
    return out.back();
  };
  auto stat = [](const std::vector<double>& v) {
    SummaryStat s;
    double sum = 0.0;
    for (double x : v) sum += x;
    s.mean = sum / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std_error = v.size() > 1
                      ? std::sqrt(ss / static_cast<double>(v.size() - 1)) /
                            std::sqrt(static_cast<double>(v.size()))
                      : 0.0;
    s.p12_5 = percentile(v, 0.125);
    s.p87_5 = percentile(v, 0.875);
    return s;
  };

  // Group runs by method, preserving first-seen order.
  std::vector<std::string> methods;
  for (const auto& r : runs) {
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) {
      methods.push_back(r.method);
    }
  }
  for (const auto& method : methods) {
    MethodSummary& summary = summary_for(method);
    std::size_t depth = 0;
    for (const auto& r : runs) {
      if (r.method == method) depth = std::max(depth, r.points.size());
    }
    for (std::size_t k = 0; k < depth; ++k) {
      std::vector<double> rmse, sr, fz, frac;
      AggregatePoint p;
      for (const auto& r : runs) {
        if (r.method != method || k >= r.points.size()) continue;
        const auto& pt = r.points[k];
        p.standard_trials = pt.standard_trials;
        p.comparisons = pt.comparisons;
        rmse.push_back(pt.rmse);
        sr.push_back(pt.srocc);
        fz.push_back(pt.srocc_fisher);
        if (pt.eig_evaluated_fraction) frac.push_back(*pt.eig_evaluated_fraction);
      }
      p.runs = rmse.size();
      p.rmse = stat(rmse);
      p.srocc = stat(sr);
      p.srocc_fisher = stat(fz);
      if (!frac.empty()) {
        double s = 0.0;
        for (double x : frac) s += x;
        p.eig_evaluated_fraction = s / static_cast<double>(frac.size());
      }
      summary.points.push_back(p);
    }
  }
  return out;
}

}  // namespace asap
