#include "asap/types.hpp"

#include <gtest/gtest.h>

#include <functional>
#include <string>

namespace asap {
namespace {

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

TEST(ModelConfigTest, DefaultsAndValidation) {
  ModelConfig cfg;
  EXPECT_EQ(cfg.beta, 1.0);
  EXPECT_EQ(cfg.prior_mean, 0.0);
  EXPECT_EQ(cfg.prior_variance, 0.5);
  EXPECT_NO_THROW(cfg.validate());
  cfg.beta = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.prior_variance = -1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(StandardTrialTest, CountsPairs) {
  EXPECT_EQ(pairs_per_standard_trial(2), 1u);
  EXPECT_EQ(pairs_per_standard_trial(20), 190u);
  EXPECT_EQ(pairs_per_standard_trial(200), 19900u);
  EXPECT_DOUBLE_EQ(standard_trials(20, 2850), 15.0);
  EXPECT_DOUBLE_EQ(standard_trials(200, 9950), 0.5);
  EXPECT_THROW(standard_trials(1, 3), std::invalid_argument);
}

TEST(PairTest, CanonicalOrdersIndices) {
  EXPECT_EQ(Pair::canonical(4, 1), (Pair{1, 4}));
  EXPECT_EQ(Pair::canonical(1, 4), (Pair{1, 4}));
}

TEST(ExperimentStateTest, RequiresTwoConditions) {
  EXPECT_THROW(ExperimentState(1), std::invalid_argument);
  EXPECT_THROW(ExperimentState(0), std::invalid_argument);
}

TEST(ExperimentStateTest, StartsAtThePriorAndFresh) {
  ExperimentState state(3);
  EXPECT_FALSE(state.posterior_stale());
  ASSERT_EQ(state.posterior().size(), 3u);
  for (const auto& s : state.posterior().scores) {
    EXPECT_EQ(s.mean, 0.0);
    EXPECT_EQ(s.variance, 0.5);
  }
}

TEST(ExperimentStateTest, AppendAssignsTrialIndicesAndMarksStale) {
  ExperimentState state(3);
  state.append(0, 1, kFirstPreferred);
  const auto& r = state.append(2, 1, kSecondPreferred);
  EXPECT_EQ(r.trial_index, 1u);
  EXPECT_EQ(state.num_comparisons(), 2u);
  EXPECT_TRUE(state.posterior_stale());
  EXPECT_DOUBLE_EQ(state.standard_trials(), 2.0 / 3.0);
  EXPECT_NO_THROW(validate_history(state));
  state.set_posterior(ScorePosterior::prior(3, state.config()));
  EXPECT_FALSE(state.posterior_stale());
}

TEST(ExperimentStateTest, RejectsInvalidRecordsNamingTheTrial) {
  ExperimentState state(3);
  state.append(0, 1, kFirstPreferred);
  EXPECT_EQ(message_of([&] { state.append(1, 1, kFirstPreferred); }),
            "trial 1: self-comparison of condition 1");
  EXPECT_EQ(message_of([&] { state.append(0, 3, kFirstPreferred); }),
            "trial 1: condition index out of range (n=3)");
  EXPECT_EQ(message_of([&] { state.append(0, 2, 0); }),
            "trial 1: invalid outcome 0 (expected +1 or -1)");
  EXPECT_EQ(state.num_comparisons(), 1u);
  EXPECT_THROW(state.set_posterior(ScorePosterior::prior(2, {})), std::invalid_argument);
}

TEST(ValidateHistoryTest, ChecksTrialOrder) {
  std::vector<ComparisonRecord> h = {{0, 0, 1, 1}, {2, 1, 2, -1}};
  EXPECT_THROW(validate_history(h, 3), ValidationError);
  h[1].trial_index = 1;
  EXPECT_NO_THROW(validate_history(h, 3));
}

}  // namespace
}  // namespace asap
