#pragma once

#include <string>

// Reward-accumulator curriculum over task difficulty z (bar height or
// obstacle width, in meters), plus the difficulty-driven control-frequency
// and offset-penalty schedules.
namespace bds::curriculum {

enum class TaskKind { kHighJump, kObstacleJump };

struct CurriculumConfig {
  double z_min = 0.0;
  double z_max = 0.0;
  double delta_z = 0.0;
  /// Accumulated-reward threshold for advancing one level.
  double r_threshold = 0.0;
  TaskKind task = TaskKind::kHighJump;

  void validate() const;
};

/// Table presets, converted from centimeters to meters.
CurriculumConfig high_jump_preset();
CurriculumConfig obstacle_jump_preset();
CurriculumConfig preset(TaskKind task);

struct CurriculumState {
  double z = 0.0;
  double accumulator = 0.0;

  static CurriculumState initial(const CurriculumConfig& cfg) { return {cfg.z_min, 0.0}; }
  friend bool operator==(const CurriculumState&, const CurriculumState&) = default;
};

/// Adds the iteration's average reward to the accumulator. When the
/// accumulator strictly exceeds the threshold, z moves up by delta_z (capped
/// at z_max) and the accumulator resets.
CurriculumState advance(const CurriculumState& state, double avg_iter_reward,
                        const CurriculumConfig& cfg);

/// rho = 2z - 1 for high jumps, z for obstacle jumps.
double difficulty_ratio(double z, TaskKind task);

/// 10 + 20 Clip(rho, 0, 1), in Hz.
double control_frequency(double z, TaskKind task);

/// 48 - 33 Clip(rho, 0, 1).
double offset_penalty_coefficient(double z, TaskKind task);

TaskKind parse_task_kind(const std::string& name);
std::string to_string(TaskKind task);

}  // namespace bds::curriculum
