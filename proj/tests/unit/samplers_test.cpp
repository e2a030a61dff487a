#include "asap/samplers.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "oracles.hpp"

namespace asap {
namespace {

std::vector<double> ladder(std::size_t n) {
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = 0.5 * static_cast<double>(i);
  return s;
}

// Answers a batch by the point-score order (higher index wins).
void answer(ExperimentState& state, const Batch& batch, const std::vector<double>& scores) {
  for (const auto& p : batch) {
    state.append(p.first, p.second, scores[p.first] > scores[p.second] ? 1 : -1);
  }
}

TEST(SamplerKindTest, NamesRoundTrip) {
  for (auto k : {SamplerKind::asap, SamplerKind::asap_approx, SamplerKind::random,
                 SamplerKind::quicksort, SamplerKind::swiss, SamplerKind::ts_sampling}) {
    EXPECT_EQ(parse_sampler_kind(to_string(k)), k);
  }
  EXPECT_EQ(parse_sampler_kind("fpc"), SamplerKind::random);
  EXPECT_THROW(parse_sampler_kind("bogus"), std::invalid_argument);
  EXPECT_EQ(posterior_policy(SamplerKind::asap), PosteriorPolicy::full);
  EXPECT_EQ(posterior_policy(SamplerKind::asap_approx), PosteriorPolicy::online);
  EXPECT_EQ(posterior_policy(SamplerKind::random), PosteriorPolicy::none);
}

TEST(MatchQualityTest, FollowsTheClosedForm) {
  const ModelConfig cfg;
  const GaussianScore a{1.0, 0.5}, b{0.0, 0.5};
  EXPECT_NEAR(match_quality(a, b, cfg), std::sqrt(2.0 / 3.0) * std::exp(-1.0 / 6.0), 1e-15);
  EXPECT_GT(match_quality(b, b, cfg), match_quality(a, b, cfg));
}

TEST(ArgmaxPairTest, PicksTheLargestAndBreaksTiesUniformly) {
  EigMatrix m(4);
  m.set(0, 1, 0.1);
  m.set(2, 3, 0.4);
  m.set(1, 3, 0.2);
  Rng rng(1);
  EXPECT_EQ(argmax_pair(m, rng), (Pair{2, 3}));
  m.set(0, 2, 0.4);
  std::map<std::size_t, int> hits;
  for (int k = 0; k < 400; ++k) hits[argmax_pair(m, rng).first]++;
  EXPECT_EQ(hits.size(), 2u);
  EXPECT_GT(hits[0], 120);
  EXPECT_GT(hits[2], 120);
  EXPECT_THROW(argmax_pair(EigMatrix(3), rng), std::logic_error);
}

TEST(ReciprocalWeightsTest, FillsSkippedPairsWithAHeavyWeight) {
  EigMatrix m(3);
  m.set(0, 1, 0.5);
  m.set(1, 2, 0.25);
  const auto w = reciprocal_gain_weights(m);
  EXPECT_EQ(w[0 * 3 + 1], 2.0);
  EXPECT_EQ(w[2 * 3 + 1], 4.0);
  EXPECT_EQ(w[0 * 3 + 2], 40.0);
  const auto batch = mst_batch(m);
  EXPECT_EQ(batch, (Batch{{0, 1}, {1, 2}}));
  // Nothing evaluated: unit weights, star on 0.
  EXPECT_EQ(mst_batch(EigMatrix(3)), (Batch{{0, 1}, {0, 2}}));
}

class EigSamplerTest : public ::testing::TestWithParam<SamplerKind> {};

TEST_P(EigSamplerTest, BatchesSpanAllConditions) {
  const std::size_t n = 8;
  const auto scores = ladder(n);
  ExperimentState state(n);
  PosteriorTracker tracker(n, state.config());
  auto sampler = make_sampler({GetParam(), true, true, 42});
  for (int round = 0; round < 5; ++round) {
    const auto batch = sampler->select(state, &tracker.graph());
    EXPECT_TRUE(oracle::is_spanning_tree(n, batch)) << "round " << round;
    ASSERT_TRUE(sampler->last_eig_fraction().has_value());
    if (round == 0) EXPECT_EQ(*sampler->last_eig_fraction(), 1.0);
    answer(state, batch, scores);
    tracker.refresh(state);
  }
}

TEST_P(EigSamplerTest, SequentialModeReturnsOnePair) {
  ExperimentState state(5);
  auto sampler = make_sampler({GetParam(), false, false, 3});
  const auto batch = sampler->select(state, nullptr);
  ASSERT_EQ(batch.size(), 1u);
  EXPECT_LT(batch[0].first, batch[0].second);
  EXPECT_EQ(*sampler->last_eig_fraction(), 1.0);
}

TEST_P(EigSamplerTest, SameSeedSameSelections) {
  const auto scores = ladder(6);
  ExperimentState a(6), b(6);
  auto sa = make_sampler({GetParam(), true, true, 9});
  auto sb = make_sampler({GetParam(), true, true, 9});
  PosteriorTracker ta(6, a.config()), tb(6, b.config());
  for (int round = 0; round < 3; ++round) {
    const auto ba = sa->select(a, &ta.graph());
    const auto bb = sb->select(b, &tb.graph());
    ASSERT_EQ(ba, bb);
    answer(a, ba, scores);
    answer(b, bb, scores);
    ta.refresh(a);
    tb.refresh(b);
  }
}

TEST_P(EigSamplerTest, RequiresAFreshPosterior) {
  ExperimentState state(4);
  state.append(0, 1, 1);
  auto sampler = make_sampler({GetParam(), true, true, 1});
  EXPECT_THROW(sampler->select(state, nullptr), std::logic_error);
}

INSTANTIATE_TEST_SUITE_P(Kinds, EigSamplerTest,
                         ::testing::Values(SamplerKind::asap, SamplerKind::asap_approx),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(NextBatchTest, HonoursTheBatchFlag) {
  ExperimentState state(5);
  Rng rng(4);
  SamplerOptions opts{SamplerKind::asap_approx, true, true, 0};
  EXPECT_EQ(next_batch(state, opts, rng).size(), 4u);
  opts.batch = false;
  EXPECT_EQ(next_batch(state, opts, rng).size(), 1u);
  opts.kind = SamplerKind::quicksort;
  EXPECT_THROW(next_pair(state, opts, rng), std::invalid_argument);
}

TEST(NextPairTest, FollowsTheLargestGain) {
  // After 0 beats 1 many times, a pair involving 2 or 3 is more informative.
  ExperimentState state(4);
  for (int k = 0; k < 20; ++k) state.append(0, 1, 1);
  state.set_posterior(full_posterior(state.history(), 4, state.config()).posterior);
  Rng rng(2);
  for (auto kind : {SamplerKind::asap, SamplerKind::asap_approx}) {
    const auto p = next_pair(state, {kind, false, false, 0}, rng);
    EXPECT_NE(p, (Pair{0, 1}));
  }
}

TEST(RandomSamplerTest, DrawsPairsUniformly) {
  ExperimentState state(4);
  auto sampler = make_sampler({SamplerKind::random, true, true, 5});
  std::map<Pair, int> hits;
  for (int k = 0; k < 6000; ++k) {
    const auto b = sampler->select(state, nullptr);
    ASSERT_EQ(b.size(), 1u);
    ASSERT_LT(b[0].first, b[0].second);
    hits[b[0]]++;
  }
  EXPECT_EQ(hits.size(), 6u);
  for (const auto& [pair, count] : hits) EXPECT_NEAR(count, 1000, 150);
  EXPECT_FALSE(sampler->last_eig_fraction().has_value());
}

TEST(MatchmakingSamplerTest, PicksTheClosestMatch) {
  ExperimentState state(4);
  state.append(0, 1, 1);
  state.set_posterior(ScorePosterior({{0.0, 0.5}, {2.0, 0.5}, {0.1, 0.5}, {5.0, 0.5}}));
  auto sampler = make_sampler({SamplerKind::ts_sampling, true, true, 0});
  EXPECT_EQ(sampler->select(state, nullptr), (Batch{{0, 2}}));
}

TEST(SwissSamplerTest, FirstRoundIsAPerfectMatching) {
  ExperimentState state(8);
  SwissSampler sampler({SamplerKind::swiss, true, true, 12});
  const auto batch = sampler.select(state, nullptr);
  ASSERT_EQ(batch.size(), 4u);
  std::set<std::size_t> seen;
  for (const auto& p : batch) {
    seen.insert(p.first);
    seen.insert(p.second);
  }
  EXPECT_EQ(seen.size(), 8u);
}

TEST(SwissSamplerTest, LaterRoundsPairNeighboursNotYetMet) {
  const std::size_t n = 6;
  const auto scores = ladder(n);
  ExperimentState state(n);
  PosteriorTracker tracker(n, state.config());
  SwissSampler sampler({SamplerKind::swiss, true, true, 1});
  std::set<Pair> met;
  for (int round = 0; round < 3; ++round) {
    const auto batch = sampler.select(state, nullptr);
    EXPECT_EQ(batch.size(), 3u);
    for (const auto& p : batch) {
      EXPECT_TRUE(met.insert(p).second) << "rematch in round " << round;
    }
    answer(state, batch, scores);
    sampler.observe(state.history().subspan(state.num_comparisons() - batch.size()));
    tracker.refresh(state);
  }
  EXPECT_EQ(sampler.rounds_played(), 3u);
}

TEST(SwissSamplerTest, OddCountSitsOneOut) {
  ExperimentState state(5);
  SwissSampler sampler({SamplerKind::swiss, true, true, 1});
  EXPECT_EQ(sampler.select(state, nullptr).size(), 2u);
}

TEST(QuicksortSamplerTest, SortsWithNLogNComparisons) {
  const std::size_t n = 32;
  Rng rng(8);
  std::vector<double> scores(n);
  for (auto& s : scores) s = uniform01(rng);
  ExperimentState state(n);
  QuicksortSampler sampler({SamplerKind::quicksort, true, true, 6});
  std::size_t comparisons = 0;
  while (sampler.completed_sorts() == 0) {
    const auto batch = sampler.select(state, nullptr);
    if (sampler.completed_sorts() > 0) break;
    const std::size_t before = state.num_comparisons();
    answer(state, batch, scores);
    sampler.observe(state.history().subspan(before));
    comparisons += batch.size();
    ASSERT_LT(comparisons, n * n);
  }
  // Expected 2 n ln n, about 222; the full-pair count is 496.
  EXPECT_LT(comparisons, 400u);
  EXPECT_GE(comparisons, n - 1);
}

TEST(QuicksortSamplerTest, CompletedPartitionsYieldTheTrueOrder) {
  const std::size_t n = 10;
  std::vector<double> scores = {3, 1, 4, 1.5, 9, 2.6, 5, 3.5, 8, 7};
  ExperimentState state(n);
  QuicksortSampler sampler({SamplerKind::quicksort, true, true, 2});
  sampler.set_next_pivot(4);
  const auto first = sampler.select(state, nullptr);
  EXPECT_EQ(first.size(), n - 1);
  for (const auto& p : first) EXPECT_TRUE(p.first == 4 || p.second == 4);
  Batch batch = first;
  while (true) {
    const std::size_t before = state.num_comparisons();
    answer(state, batch, scores);
    sampler.observe(state.history().subspan(before));
    batch = sampler.select(state, nullptr);
    if (sampler.completed_sorts() == 1) break;
    ASSERT_FALSE(batch.empty());
  }
  std::vector<std::size_t> expected(n);
  std::iota(expected.begin(), expected.end(), 0);
  std::sort(expected.begin(), expected.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  EXPECT_EQ(sampler.sorted_order(), expected);
}

}  // namespace
}  // namespace asap
