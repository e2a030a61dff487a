#include "asap/metrics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

namespace asap {
namespace {

using V = std::vector<double>;

TEST(RmseTest, IgnoresAConstantShift) {
  const V truth = {0.0, 1.0, 2.0, 3.0};
  const V shifted = {10.0, 11.0, 12.0, 13.0};
  EXPECT_NEAR(rmse_aligned(shifted, truth), 0.0, 1e-15);
}

TEST(RmseTest, MatchesHandComputation) {
  const V truth = {0.0, 0.0, 0.0};
  const V est = {1.0, -1.0, 0.0};
  EXPECT_NEAR(rmse_aligned(est, truth), std::sqrt(2.0 / 3.0), 1e-15);
  EXPECT_THROW(rmse_aligned(V{1.0}, V{1.0}), std::invalid_argument);
  EXPECT_THROW(rmse_aligned(V{1.0, 2.0}, V{1.0}), std::invalid_argument);
}

TEST(RanksTest, TiesShareTheirAverageRank) {
  EXPECT_EQ(average_ranks(V{3.0, 1.0, 2.0}), (V{3.0, 1.0, 2.0}));
  EXPECT_EQ(average_ranks(V{1.0, 2.0, 2.0, 5.0}), (V{1.0, 2.5, 2.5, 4.0}));
  EXPECT_EQ(average_ranks(V{7.0, 7.0, 7.0}), (V{2.0, 2.0, 2.0}));
}

TEST(SroccTest, ReferenceValues) {
  EXPECT_NEAR(srocc(V{1, 3, 2, 4}, V{1, 2, 3, 4}), 0.8, 1e-15);
  EXPECT_NEAR(srocc(V{4, 3, 2, 1}, V{1, 2, 3, 4}), -1.0, 1e-15);
  // Monotone transforms do not matter.
  EXPECT_NEAR(srocc(V{1, 10, 100, 1000}, V{0.1, 0.2, 0.3, 0.4}), 1.0, 1e-15);
}

TEST(SroccTest, HandlesTiesAsPearsonOnAverageRanks) {
  // Ranks (1, 2.5, 2.5, 4) against (1, 2, 3, 4): r = 4.5 / sqrt(4.5 * 5).
  EXPECT_NEAR(srocc(V{1, 2, 2, 3}, V{1, 2, 3, 4}), std::sqrt(0.9), 1e-12);
}

TEST(SroccTest, ConstantInputIsUndefined) {
  EXPECT_THROW(srocc(V{1, 1, 1}, V{1, 2, 3}), std::domain_error);
  EXPECT_THROW(srocc(V{1, 2, 3}, V{0, 0, 0}), std::domain_error);
}

TEST(FisherTest, IsArctanhWithClamping) {
  EXPECT_NEAR(fisher_transform(0.5), std::atanh(0.5), 1e-15);
  EXPECT_EQ(fisher_transform(0.0), 0.0);
  EXPECT_TRUE(std::isfinite(fisher_transform(1.0)));
  EXPECT_NEAR(fisher_transform(1.0), std::atanh(1.0 - 1e-7), 1e-12);
  EXPECT_NEAR(fisher_transform(-1.0), -fisher_transform(1.0), 1e-15);
}

}  // namespace
}  // namespace asap
