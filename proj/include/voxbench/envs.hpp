#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "voxbench/physics.hpp"

namespace voxbench {

enum class TaskCategory { Locomotion, ObjectManipulation, ClimbingBalancing };

const char* to_string(TaskCategory c);

/// Canonical per-task text and scope flag.
struct TaskInfo {
  std::string_view id;
  TaskCategory category;
  std::string_view description;
  std::string_view objective;
  bool supported;
};

/// All twelve benchmark tasks in table order; the unsupported ones keep
/// their text so prompts stay faithful.
std::span<const TaskInfo> task_table();
const TaskInfo& task_info(std::string_view id);  // throws UnknownTask
std::vector<std::string> supported_tasks();

enum class RewardRule { Displacement, Bidirectional, Push, Carry, Jump, Balance };

enum class SpawnAlign { LeftEdge, Centered };

struct Goal {
  double time = 0.0;      // seconds after reward accrual starts
  double target_x = 0.0;  // absolute x
};

/// Where the task's box is placed relative to the spawned robot.
struct BoxPlacement {
  enum class Where { Ahead, Above } where = Where::Ahead;
  double width = 0.2;
  double height = 0.2;
  double mass = 0.2;
  double clearance = 0.1;  // gap to the robot's right edge / top
};

struct EnvSpec {
  std::string id;
  TaskCategory category = TaskCategory::Locomotion;
  std::string description;
  std::string objective;
  RewardRule rule = RewardRule::Displacement;
  Terrain terrain;
  std::optional<BoxPlacement> box;
  std::vector<Goal> goals;
  int horizon = 500;  // control ticks of reward accrual
  double spawn_x = 0.0;
  SpawnAlign align = SpawnAlign::LeftEdge;
  std::optional<double> fall_height;  // COM below this ends the episode
  double settle_time = 0.5;
  double max_tilt = 0.0;  // radians, Balance rule only
  /// World x of the scene frame. Simulation runs in scene coordinates so a
  /// shifted scene reproduces rewards bit for bit.
  double origin_x = 0.0;

  Vec2 to_world(Vec2 p) const { return {p.x + origin_x, p.y}; }
  Terrain world_terrain() const { return terrain.shifted(origin_x); }
};

/// Optional terrain/horizon overrides, lengths in voxel units.
struct EnvOverrides {
  std::optional<int> horizon;
  double scene_offset = 0.0;  // metres; moves the whole scene, see EnvSpec::origin_x
  std::optional<int> step_count;
  std::optional<double> step_rise;
  std::optional<double> step_run;
  std::optional<int> platform_count;
  std::optional<double> platform_width;
  std::optional<double> gap_width;
  std::optional<double> pole_width;
  std::optional<double> pole_height;
  std::optional<double> box_size;
  std::optional<double> box_mass;
};

enum class TerminalReason { None, Horizon, TaskTerminal, Instability };

const char* to_string(TerminalReason r);

struct Termination {
  bool done = false;
  TerminalReason reason = TerminalReason::None;
  std::string detail;
  double adjustment = 0.0;  // added to the episode total when done
};

/// One episode's view of a task: scene geometry plus the reward accumulator.
class EnvInstance {
 public:
  explicit EnvInstance(EnvSpec spec);

  const EnvSpec& spec() const { return spec_; }

  /// Bottom-left origin for a body of the given extent.
  Vec2 spawn_origin(double body_width) const;
  Scene scene_for(const SoftBody& placed_body) const;

  /// Starts reward accrual from `state` (the settled pose).
  void begin(const SoftBody& body, const SimState& state);
  double reward_step(const SimState& prev, const SimState& curr);
  Termination terminal(const SimState& state, int step_index) const;
  void finish(const Termination& t) { total_ += t.adjustment; }

  double total() const { return total_; }
  double current_target(double t) const;

 private:
  EnvSpec spec_;
  const SoftBody* body_ = nullptr;
  double start_time_ = 0.0;
  double peak_height_ = 0.0;
  double total_ = 0.0;
};

/// Builds a supported task. Throws UnsupportedTask for the four
/// out-of-scope names and UnknownTask for anything else.
EnvInstance make_env(std::string_view id, const EnvOverrides& overrides = {},
                     double voxel_size = 0.1);

inline constexpr double kCarrierDropPenalty = -2.0;
inline constexpr double kBalanceTickReward = 0.01;

}  // namespace voxbench
