#include "bds/rewards.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bds::rewards {

double novelty_reward(const Vector& f, const NoveltyConfig& cfg) {
  require(cfg.d_threshold > 0.0, "novelty_reward: d_threshold must be > 0");
  require(!cfg.existing_features.empty(), "novelty_reward: existing feature set is empty");
  double nearest = std::numeric_limits<double>::infinity();
  for (const auto& e : cfg.existing_features) {
    require(e.size() == f.size(), "novelty_reward: feature dimension mismatch");
    nearest = std::min(nearest, cfg.metric.distance(e, f));
  }
  return std::clamp(nearest / cfg.d_threshold, 0.01, 1.0);
}

double naturalness_reward(double offset_l1, const NaturalnessConfig& cfg) {
  require(cfg.c_offset > 0.0, "naturalness_reward: c_offset must be > 0");
  require(offset_l1 >= 0.0, "naturalness_reward: offset norm must be >= 0");
  const double ratio = offset_l1 / cfg.c_offset;
  return 1.0 - std::clamp(ratio * ratio, 0.0, 1.0);
}

double naturalness_reward_step(const Vector& offset, const NaturalnessConfig& cfg) {
  return naturalness_reward(offset.lpNorm<1>(), cfg);
}

double mean_offset_l1(std::span<const Vector> offsets) {
  require(!offsets.empty(), "mean_offset_l1: empty episode");
  double sum = 0.0;
  for (const auto& o : offsets) sum += o.lpNorm<1>();
  return sum / static_cast<double>(offsets.size());
}

double task_reward(bool complete, double mean_root_angvel, bool safe_landing) {
  require(mean_root_angvel >= 0.0, "task_reward: angular velocity magnitude must be >= 0");
  const double r_complete = complete ? 1.0 : 0.0;
  const double r_omega = std::exp(-0.02 * mean_root_angvel);
  const double r_safety = safe_landing ? 1.0 : 0.7;
  return r_complete * r_omega * r_safety;
}

double stage_reward(double task, double naturalness, std::optional<double> novelty) {
  double r = task * naturalness;
  if (novelty) r *= *novelty;
  return r;
}

double runup_reward_highjump(const Vector& omega, const Vector& omega_bar, double v_z,
                             double v_z_bar) {
  require(omega.size() == omega_bar.size(), "runup_reward_highjump: dimension mismatch");
  const double dv = v_z - v_z_bar;
  return std::exp(-(omega - omega_bar).lpNorm<1>() / 3.0 - 0.7 * dv * dv);
}

double runup_reward_obstacle(const Vector& omega, const Vector& omega_bar) {
  require(omega.size() == omega_bar.size(), "runup_reward_obstacle: dimension mismatch");
  return std::exp(-(omega - omega_bar).lpNorm<1>() / 3.0);
}

}  // namespace bds::rewards
