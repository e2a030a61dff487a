#include <cstddef>
#include <vector>

#include "asap/eig.hpp"
#include "asap/ground_truth.hpp"
#include "asap/mst.hpp"
#include "asap/samplers.hpp"
#include "benchmark/benchmark.h"

namespace {

asap::ExperimentState trained_state(std::size_t n, double trials) {
  asap::Rng rng(3);
  const asap::ModelConfig config;
  asap::ExperimentState state(n, config);
  const asap::GroundTruth truth(asap::draw_scores(n, asap::ScoreRange::medium(), rng));
  const auto count = static_cast<std::size_t>(trials * asap::pairs_per_standard_trial(n));
  for (std::size_t t = 0; t < count; ++t) {
    const std::size_t i = asap::uniform_index(rng, n);
    std::size_t j = asap::uniform_index(rng, n - 1);
    if (j >= i) ++j;
    state.append(i, j, asap::draw_outcome(truth, i, j, config, rng));
  }
  state.set_posterior(asap::full_posterior(state.history(), n, config).posterior);
  return state;
}

void BM_EigMatrix(benchmark::State& bm) {
  const auto n = static_cast<std::size_t>(bm.range(0));
  const auto mode = bm.range(1) == 0 ? asap::EigMode::full : asap::EigMode::approx;
  const bool selective = bm.range(2) != 0;
  const auto state = trained_state(n, 2.0);
  asap::FactorGraph graph(n, state.config());
  for (const auto& r : state.history()) graph.add_comparison(r);
  graph.run(asap::EpSettings{});
  asap::Rng rng(11);
  for (auto _ : bm) {
    asap::EigEvaluator evaluator(state, mode, mode == asap::EigMode::full ? &graph : nullptr);
    auto m = evaluator.matrix(selective, rng);
    benchmark::DoNotOptimize(m.num_evaluated());
  }
}
BENCHMARK(BM_EigMatrix)
    ->ArgNames({"n", "approx", "selective"})
    ->Args({20, 0, 0})
    ->Args({20, 0, 1})
    ->Args({20, 1, 0})
    ->Args({50, 1, 0})
    ->Unit(benchmark::kMillisecond);

void BM_Mst(benchmark::State& bm) {
  const auto n = static_cast<std::size_t>(bm.range(0));
  asap::Rng rng(5);
  std::vector<double> w(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      w[i * n + j] = w[j * n + i] = 0.01 + asap::uniform01(rng);
    }
  }
  for (auto _ : bm) {
    auto edges = asap::mst(n, w);
    benchmark::DoNotOptimize(edges.data());
  }
}
BENCHMARK(BM_Mst)->Arg(20)->Arg(200)->Unit(benchmark::kMicrosecond);

}  // namespace
