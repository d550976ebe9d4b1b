#pragma once

#include "bds/acquisition.hpp"
#include "bds/types.hpp"

#include <optional>
#include <span>
#include <vector>

// Scalar reward terms for jump-policy training loops. Callers extract the
// strategy features, offsets and angular velocities from their own rollouts.
namespace bds::rewards {

struct NoveltyConfig {
  double d_threshold = 0.0;
  FeatureMetric metric{};
  std::vector<Vector> existing_features;
};

/// Clip(min_i dist(f_i, f) / d_threshold, 0.01, 1).
double novelty_reward(const Vector& f, const NoveltyConfig& cfg);

struct NaturalnessConfig {
  /// Largest offset magnitude that still earns a reward.
  double c_offset = 0.0;
};

/// 1 - Clip((offset_l1 / c_offset)^2, 0, 1), where offset_l1 is the mean L1
/// norm of the action offsets over an episode.
double naturalness_reward(double offset_l1, const NaturalnessConfig& cfg);

/// Per-step form: the L1 norm of one offset vector.
double naturalness_reward_step(const Vector& offset, const NaturalnessConfig& cfg);

/// Mean L1 norm of a sequence of per-step offsets.
double mean_offset_l1(std::span<const Vector> offsets);

/// r_complete * exp(-0.02 |omega|) * (1.0 safe | 0.7 unsafe).
double task_reward(bool complete, double mean_root_angvel, bool safe_landing);

/// Product of the factors; the novelty factor is applied only when present.
double stage_reward(double task, double naturalness, std::optional<double> novelty = std::nullopt);

/// exp(-1/3 |omega - omega_bar|_1 - 0.7 (v_z - v_z_bar)^2)
double runup_reward_highjump(const Vector& omega, const Vector& omega_bar, double v_z,
                             double v_z_bar);

/// exp(-1/3 |omega - omega_bar|_1)
double runup_reward_obstacle(const Vector& omega, const Vector& omega_bar);

}  // namespace bds::rewards
