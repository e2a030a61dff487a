#include <cstddef>
#include <vector>

#include "asap/ground_truth.hpp"
#include "asap/inference.hpp"
#include "benchmark/benchmark.h"

namespace {

// Outcomes for `count` uniformly random pairs against medium-range scores.
std::vector<asap::ComparisonRecord> random_history(std::size_t n, std::size_t count,
                                                   std::uint64_t seed) {
  asap::Rng rng(seed);
  const asap::ModelConfig config;
  const asap::GroundTruth truth(asap::draw_scores(n, asap::ScoreRange::medium(), rng));
  std::vector<asap::ComparisonRecord> history;
  for (std::size_t t = 0; t < count; ++t) {
    const std::size_t i = asap::uniform_index(rng, n);
    std::size_t j = asap::uniform_index(rng, n - 1);
    if (j >= i) ++j;
    history.push_back({t, i, j, asap::draw_outcome(truth, i, j, config, rng)});
  }
  return history;
}

void BM_FullPosterior(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto history = random_history(n, 5 * asap::pairs_per_standard_trial(n), 1);
  for (auto _ : state) {
    auto result = asap::full_posterior(history, n, asap::ModelConfig{});
    benchmark::DoNotOptimize(result.posterior.scores.data());
  }
  state.counters["comparisons"] = static_cast<double>(history.size());
}
BENCHMARK(BM_FullPosterior)->Arg(10)->Arg(20)->Arg(50)->Unit(benchmark::kMillisecond);

// Cost of absorbing one more comparison into a converged graph.
void BM_WarmStartIncrement(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto history = random_history(n, 5 * asap::pairs_per_standard_trial(n), 2);
  asap::FactorGraph graph(n, asap::ModelConfig{});
  for (const auto& r : history) graph.add_comparison(r);
  graph.run(asap::EpSettings{});
  for (auto _ : state) {
    graph.begin_trial();
    graph.add_comparison(0, 1, asap::kFirstPreferred);
    benchmark::DoNotOptimize(graph.run(asap::EpSettings{}, false));
    graph.rollback();
  }
}
BENCHMARK(BM_WarmStartIncrement)->Arg(20)->Arg(50)->Unit(benchmark::kMicrosecond);

void BM_AdfUpdate(benchmark::State& state) {
  const asap::ModelConfig config;
  asap::GaussianScore a{0.3, 0.4}, b{-0.1, 0.2};
  for (auto _ : state) {
    auto [na, nb] = asap::adf_update(a, b, asap::kFirstPreferred, config);
    benchmark::DoNotOptimize(na.mean + nb.mean);
  }
}
BENCHMARK(BM_AdfUpdate);

}  // namespace
