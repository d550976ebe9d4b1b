#include "bds/curriculum.hpp"

#include "bds/types.hpp"

#include <algorithm>
#include <cmath>

namespace bds::curriculum {

void CurriculumConfig::validate() const {
  require(std::isfinite(z_min) && std::isfinite(z_max) && z_min <= z_max,
          "CurriculumConfig: need z_min <= z_max");
  require(delta_z > 0.0, "CurriculumConfig: delta_z must be > 0");
  require(r_threshold > 0.0, "CurriculumConfig: reward threshold must be > 0");
}

CurriculumConfig high_jump_preset() { return {0.50, 2.00, 0.01, 30.0, TaskKind::kHighJump}; }

CurriculumConfig obstacle_jump_preset() {
  return {0.05, 2.50, 0.05, 50.0, TaskKind::kObstacleJump};
}

CurriculumConfig preset(TaskKind task) {
  return task == TaskKind::kHighJump ? high_jump_preset() : obstacle_jump_preset();
}

CurriculumState advance(const CurriculumState& state, double avg_iter_reward,
                        const CurriculumConfig& cfg) {
  cfg.validate();
  require(avg_iter_reward >= 0.0, "advance: average iteration reward must be >= 0");
  CurriculumState next = state;
  next.accumulator += avg_iter_reward;
  if (next.accumulator > cfg.r_threshold) {
    next.z = std::min(next.z + cfg.delta_z, cfg.z_max);
    next.accumulator = 0.0;
  }
  return next;
}

double difficulty_ratio(double z, TaskKind task) {
  return task == TaskKind::kHighJump ? 2.0 * z - 1.0 : z;
}

double control_frequency(double z, TaskKind task) {
  return 10.0 + 20.0 * std::clamp(difficulty_ratio(z, task), 0.0, 1.0);
}

double offset_penalty_coefficient(double z, TaskKind task) {
  return 48.0 - 33.0 * std::clamp(difficulty_ratio(z, task), 0.0, 1.0);
}

TaskKind parse_task_kind(const std::string& name) {
  if (name == "high_jump" || name == "highjump") return TaskKind::kHighJump;
  if (name == "obstacle_jump" || name == "obstaclejump") return TaskKind::kObstacleJump;
  throw ContractError("unknown curriculum task kind '" + name + "'");
}

std::string to_string(TaskKind task) {
  return task == TaskKind::kHighJump ? "high_jump" : "obstacle_jump";
}

}  // namespace bds::curriculum
