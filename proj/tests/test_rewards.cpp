#include "bds/rewards.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace {

using bds::Vector;
namespace rw = bds::rewards;

rw::NoveltyConfig novelty_cfg(double threshold, std::vector<Vector> existing) {
  return {threshold, bds::FeatureMetric::euclidean(), std::move(existing)};
}

TEST(NoveltyReward, ClipEndpointsAreExact) {
  const auto cfg = novelty_cfg(M_PI / 2, {Vector::Constant(1, 0.0), Vector::Constant(1, 1.0)});
  EXPECT_EQ(rw::novelty_reward(Vector::Constant(1, 1.0), cfg), 0.01);   // duplicate
  EXPECT_EQ(rw::novelty_reward(Vector::Constant(1, 1.001), cfg), 0.01);  // below the floor
  EXPECT_EQ(rw::novelty_reward(Vector::Constant(1, 10.0), cfg), 1.0);
  EXPECT_EQ(rw::novelty_reward(Vector::Constant(1, 1.0 + M_PI / 2), cfg), 1.0);
}

TEST(NoveltyReward, LinearBetweenEndpoints) {
  const auto cfg = novelty_cfg(2.0, {Vector::Zero(2)});
  EXPECT_DOUBLE_EQ(rw::novelty_reward((Vector(2) << 0.6, 0.8).finished(), cfg), 0.5);
}

TEST(NoveltyReward, UsesNearestExistingFeature) {
  const auto cfg = novelty_cfg(1.0, {Vector::Constant(1, 0.0), Vector::Constant(1, 0.9)});
  EXPECT_DOUBLE_EQ(rw::novelty_reward(Vector::Constant(1, 0.6), cfg), 0.3);
}

TEST(NoveltyReward, AngularWrap) {
  rw::NoveltyConfig cfg{1.0, bds::FeatureMetric::angular(), {Vector::Constant(1, 0.1)}};
  EXPECT_NEAR(rw::novelty_reward(Vector::Constant(1, 2 * M_PI - 0.2), cfg), 0.3, 1e-12);
}

TEST(NoveltyReward, RejectsBadInput) {
  EXPECT_THROW(rw::novelty_reward(Vector::Zero(1), novelty_cfg(1.0, {})), bds::ContractError);
  EXPECT_THROW(rw::novelty_reward(Vector::Zero(1), novelty_cfg(0.0, {Vector::Zero(1)})), bds::ContractError);
  EXPECT_THROW(rw::novelty_reward(Vector::Zero(2), novelty_cfg(1.0, {Vector::Zero(1)})), bds::ContractError);
}

TEST(NaturalnessReward, HalfOffsetGivesThreeQuarters) {
  for (double c : {15.0, 31.5, 48.0, 1.0}) EXPECT_EQ(rw::naturalness_reward(c / 2, {c}), 0.75);
}

TEST(NaturalnessReward, ClipsAndEndpoints) {
  EXPECT_EQ(rw::naturalness_reward(0.0, {10.0}), 1.0);
  EXPECT_EQ(rw::naturalness_reward(10.0, {10.0}), 0.0);
  EXPECT_EQ(rw::naturalness_reward(25.0, {10.0}), 0.0);
  EXPECT_THROW(rw::naturalness_reward(1.0, {0.0}), bds::ContractError);
  EXPECT_THROW(rw::naturalness_reward(-1.0, {1.0}), bds::ContractError);
}

TEST(NaturalnessReward, EpisodeMeanOfL1Norms) {
  const std::vector<Vector> offsets{(Vector(2) << 1, -1).finished(), (Vector(2) << 0, 4).finished()};
  EXPECT_DOUBLE_EQ(rw::mean_offset_l1(offsets), 3.0);
  EXPECT_DOUBLE_EQ(rw::naturalness_reward_step((Vector(2) << 1, -2).finished(), {6.0}), 0.75);
}

TEST(TaskReward, UnsafeLandingAtFifty) {
  EXPECT_NEAR(rw::task_reward(true, 50.0, false), 0.7 * std::exp(-1.0), 1e-12);
  EXPECT_NEAR(rw::task_reward(true, 50.0, true), std::exp(-1.0), 1e-12);
  EXPECT_EQ(rw::task_reward(true, 0.0, true), 1.0);
  EXPECT_EQ(rw::task_reward(false, 0.0, true), 0.0);
}

TEST(StageReward, NoveltyFactorOptional) {
  EXPECT_DOUBLE_EQ(rw::stage_reward(0.5, 0.8), 0.4);
  EXPECT_DOUBLE_EQ(rw::stage_reward(0.5, 0.8, 0.5), 0.2);
}

TEST(RunupReward, MatchesClosedForm) {
  const Vector w = (Vector(3) << 1, 2, 3).finished(), wb = (Vector(3) << 1.5, 2, 2).finished();
  EXPECT_NEAR(rw::runup_reward_obstacle(w, wb), std::exp(-0.5), 1e-15);
  EXPECT_NEAR(rw::runup_reward_highjump(w, wb, 3.0, 2.0), std::exp(-0.5 - 0.7), 1e-15);
  EXPECT_EQ(rw::runup_reward_obstacle(w, w), 1.0);
  EXPECT_THROW(rw::runup_reward_obstacle(w, Vector::Zero(2)), bds::ContractError);
}

}  // namespace
