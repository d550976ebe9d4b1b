#include "bds/curriculum.hpp"
#include "bds/types.hpp"

#include <gtest/gtest.h>

namespace {

namespace cur = bds::curriculum;
using cur::TaskKind;

TEST(CurriculumSchedules, HighJumpEasiestLevel) {
  EXPECT_EQ(cur::control_frequency(0.5, TaskKind::kHighJump), 10.0);
  EXPECT_EQ(cur::offset_penalty_coefficient(0.5, TaskKind::kHighJump), 48.0);
}

TEST(CurriculumSchedules, HighJumpOneMeter) {
  EXPECT_EQ(cur::control_frequency(1.0, TaskKind::kHighJump), 30.0);
  EXPECT_EQ(cur::offset_penalty_coefficient(1.0, TaskKind::kHighJump), 15.0);
}

TEST(CurriculumSchedules, ObstacleHalfMeter) {
  EXPECT_EQ(cur::control_frequency(0.5, TaskKind::kObstacleJump), 20.0);
  EXPECT_EQ(cur::offset_penalty_coefficient(0.5, TaskKind::kObstacleJump), 31.5);
}

TEST(CurriculumSchedules, ClampedOutsideRamp) {
  EXPECT_EQ(cur::control_frequency(2.0, TaskKind::kHighJump), 30.0);
  EXPECT_EQ(cur::control_frequency(0.2, TaskKind::kHighJump), 10.0);
  EXPECT_EQ(cur::offset_penalty_coefficient(2.5, TaskKind::kObstacleJump), 15.0);
}

TEST(CurriculumSchedules, MonotoneInDifficulty) {
  for (const auto task : {TaskKind::kHighJump, TaskKind::kObstacleJump}) {
    double f = 0.0, c = 1e9;
    for (int i = 0; i <= 300; ++i) {
      const double z = i * 0.01;
      EXPECT_GE(cur::control_frequency(z, task), f);
      EXPECT_LE(cur::offset_penalty_coefficient(z, task), c);
      f = cur::control_frequency(z, task);
      c = cur::offset_penalty_coefficient(z, task);
    }
  }
}

TEST(CurriculumPresets, TableValuesInMeters) {
  const auto hj = cur::high_jump_preset();
  EXPECT_DOUBLE_EQ(hj.z_min, 0.50);
  EXPECT_DOUBLE_EQ(hj.z_max, 2.00);
  EXPECT_DOUBLE_EQ(hj.delta_z, 0.01);
  EXPECT_EQ(hj.r_threshold, 30.0);
  const auto oj = cur::obstacle_jump_preset();
  EXPECT_DOUBLE_EQ(oj.z_min, 0.05);
  EXPECT_DOUBLE_EQ(oj.z_max, 2.50);
  EXPECT_DOUBLE_EQ(oj.delta_z, 0.05);
  EXPECT_EQ(oj.r_threshold, 50.0);
}

TEST(CurriculumAdvance, StrictThresholdThenReset) {
  const auto cfg = cur::high_jump_preset();
  auto s = cur::CurriculumState::initial(cfg);
  for (int i = 0; i < 3; ++i) s = cur::advance(s, 10.0, cfg);
  // Exactly at the threshold: no advance yet.
  EXPECT_EQ(s.z, 0.5);
  EXPECT_EQ(s.accumulator, 30.0);
  s = cur::advance(s, 0.5, cfg);
  EXPECT_DOUBLE_EQ(s.z, 0.51);
  EXPECT_EQ(s.accumulator, 0.0);
}

TEST(CurriculumAdvance, CapsAtMaximum) {
  const auto cfg = cur::obstacle_jump_preset();
  cur::CurriculumState s{2.48, 0.0};
  s = cur::advance(s, 60.0, cfg);
  EXPECT_EQ(s.z, 2.5);
  s = cur::advance(s, 60.0, cfg);
  EXPECT_EQ(s.z, 2.5);
}

TEST(CurriculumAdvance, NeverDecreases) {
  const auto cfg = cur::high_jump_preset();
  auto s = cur::CurriculumState::initial(cfg);
  double prev = s.z;
  for (int i = 0; i < 500; ++i) {
    s = cur::advance(s, (i % 7) * 1.3, cfg);
    EXPECT_GE(s.z, prev);
    EXPECT_LE(s.accumulator, cfg.r_threshold + 7 * 1.3);
    prev = s.z;
  }
  EXPECT_THROW(cur::advance(s, -1.0, cfg), bds::ContractError);
}

TEST(CurriculumTaskKind, NamesRoundTrip) {
  for (const auto t : {TaskKind::kHighJump, TaskKind::kObstacleJump})
    EXPECT_EQ(cur::parse_task_kind(cur::to_string(t)), t);
  EXPECT_THROW(cur::parse_task_kind("pole_vault"), bds::ContractError);
}

}  // namespace
