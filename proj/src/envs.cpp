#include "voxbench/envs.hpp"

#include <algorithm>
#include <array>
#include <numbers>

namespace voxbench {

namespace {

constexpr std::array<TaskInfo, 12> kTasks{{
    {"Walker-v0", TaskCategory::Locomotion,
     "The robot stands on flat, rigid ground that extends far in both directions.",
     "Walk as far as possible on flat terrain.", true},
    {"BridgeWalker-v0", TaskCategory::Locomotion,
     "The robot stands at the start of a soft rope bridge that sags under load.",
     "Walk as far as possible on a soft rope-bridge.", false},
    {"BidirectionalWalker-v0", TaskCategory::Locomotion,
     "The robot stands on flat ground. A goal position switches between the right and the "
     "left of the robot several times during the episode.",
     "Walk bidirectionally towards changing goals.", true},
    {"UpStepper-v0", TaskCategory::Locomotion,
     "The robot starts on flat ground in front of a staircase of eight shallow steps.",
     "Climb up stairs of varying lengths.", true},
    {"GapJumper-v0", TaskCategory::Locomotion,
     "The robot starts on the first of a row of equal-height platforms separated by gaps. "
     "Falling into a gap ends the episode.",
     "Traverse spaced-out floating platforms at the same height.", true},
    {"Carrier-v0", TaskCategory::ObjectManipulation,
     "The robot stands on flat ground and a box is dropped onto it from above. Letting the "
     "box fall off ends the episode with a penalty.",
     "Catch a box initialized above and carry it as far as possible.", true},
    {"Carrier-v1", TaskCategory::ObjectManipulation,
     "The robot carries a box on flat ground towards a raised table.",
     "Carry a box to a table and place it on the table.", false},
    {"Pusher-v0", TaskCategory::ObjectManipulation,
     "The robot stands on flat ground with a box resting just in front of it.",
     "Push a box initialized in front of it.", true},
    {"Pusher-v1", TaskCategory::ObjectManipulation,
     "The robot stands on flat ground with a box resting just behind it.",
     "Push or drag a box initialized behind it in the forward direction.", false},
    {"Climber-v0", TaskCategory::ClimbingBalancing,
     "The robot starts between two vertical walls.",
     "Climb as high as possible on a vertical wall.", false},
    {"Jumper-v0", TaskCategory::ClimbingBalancing,
     "The robot stands on flat ground. Sideways drift is penalised.",
     "Jump as high as possible in place on flat terrain.", true},
    {"Balancer-v0", TaskCategory::ClimbingBalancing,
     "The robot rests on top of a thin vertical pole one voxel wide. Tipping over or "
     "sliding off the pole ends the episode.",
     "Initialized on top of a thin pole and balances on it.", true},
}};

constexpr double kFar = 50.0;

Terrain flat() { return Terrain({{-kFar, 0.0}, {kFar, 0.0}}); }

}  // namespace

const char* to_string(TaskCategory c) {
  switch (c) {
    case TaskCategory::Locomotion: return "Locomotion";
    case TaskCategory::ObjectManipulation: return "Object Manipulation";
    case TaskCategory::ClimbingBalancing: return "Climbing & Balancing";
  }
  return "?";
}

const char* to_string(TerminalReason r) {
  switch (r) {
    case TerminalReason::None: return "none";
    case TerminalReason::Horizon: return "horizon";
    case TerminalReason::TaskTerminal: return "task-terminal";
    case TerminalReason::Instability: return "instability";
  }
  return "?";
}

std::span<const TaskInfo> task_table() { return kTasks; }

const TaskInfo& task_info(std::string_view id) {
  for (const TaskInfo& t : kTasks) {
    if (t.id == id) return t;
  }
  throw UnknownTask("unknown task '" + std::string(id) + "'");
}

std::vector<std::string> supported_tasks() {
  std::vector<std::string> out;
  for (const TaskInfo& t : kTasks) {
    if (t.supported) out.emplace_back(t.id);
  }
  return out;
}

EnvInstance make_env(std::string_view id, const EnvOverrides& ov, double h) {
  const TaskInfo& info = task_info(id);
  if (!info.supported) {
    throw UnsupportedTask("task '" + std::string(id) + "' is not supported by this simulator");
  }
  EnvSpec spec;
  spec.id = std::string(info.id);
  spec.category = info.category;
  spec.description = std::string(info.description);
  spec.objective = std::string(info.objective);
  spec.terrain = flat();

  const double box_size = ov.box_size.value_or(2.0) * h;
  const double box_mass = ov.box_mass.value_or(0.2);

  if (id == "Walker-v0") {
    spec.rule = RewardRule::Displacement;
  } else if (id == "BidirectionalWalker-v0") {
    spec.rule = RewardRule::Bidirectional;
    spec.goals = {{0.0, 10 * h}, {3.0, -10 * h}, {6.0, 10 * h}};
  } else if (id == "UpStepper-v0") {
    spec.rule = RewardRule::Displacement;
    const int steps = ov.step_count.value_or(8);
    const double rise = ov.step_rise.value_or(0.5) * h;
    const double run = ov.step_run.value_or(3.0) * h;
    double x = 8 * h;
    std::vector<Vec2> pts{{-kFar, 0.0}, {x, 0.0}};
    for (int k = 0; k < steps; ++k) {
      pts.push_back({x, (k + 1) * rise});
      x += run;
      pts.push_back({x, (k + 1) * rise});
    }
    pts.push_back({kFar, steps * rise});
    spec.terrain = Terrain(std::move(pts));
  } else if (id == "GapJumper-v0") {
    spec.rule = RewardRule::Displacement;
    const int count = ov.platform_count.value_or(12);
    const double width = ov.platform_width.value_or(6.0) * h;
    const double gap = ov.gap_width.value_or(2.0) * h;
    const double floor = -10 * h;
    double x = -h;
    std::vector<Vec2> pts{{-kFar, floor}, {x, floor}};
    for (int k = 0; k < count; ++k) {
      pts.push_back({x, 0.0});
      x += width;
      pts.push_back({x, 0.0});
      pts.push_back({x, floor});
      x += gap;
      if (k + 1 < count) pts.push_back({x, floor});
    }
    pts.push_back({kFar, floor});
    spec.terrain = Terrain(std::move(pts));
    spec.fall_height = -h;
  } else if (id == "Carrier-v0") {
    spec.rule = RewardRule::Carry;
    spec.box = BoxPlacement{BoxPlacement::Where::Above, box_size, box_size, box_mass, h};
  } else if (id == "Pusher-v0") {
    spec.rule = RewardRule::Push;
    spec.box = BoxPlacement{BoxPlacement::Where::Ahead, box_size, box_size, box_mass, h};
  } else if (id == "Jumper-v0") {
    spec.rule = RewardRule::Jump;
  } else if (id == "Balancer-v0") {
    spec.rule = RewardRule::Balance;
    const double pw = ov.pole_width.value_or(1.0) * h;
    const double ph = ov.pole_height.value_or(3.0) * h;
    spec.terrain = Terrain(
        {{-kFar, 0.0}, {-pw / 2, 0.0}, {-pw / 2, ph}, {pw / 2, ph}, {pw / 2, 0.0}, {kFar, 0.0}});
    spec.align = SpawnAlign::Centered;
    spec.fall_height = ph;
    spec.max_tilt = 20.0 * std::numbers::pi / 180.0;
  }

  if (ov.horizon) {
    if (*ov.horizon <= 0) throw ConfigError("horizon must be positive");
    spec.horizon = *ov.horizon;
  }
  if (ov.scene_offset != 0.0) {
    // Geometry stays in scene coordinates; only the reported frame moves.
    spec.origin_x = ov.scene_offset;
  }
  return EnvInstance(std::move(spec));
}

EnvInstance::EnvInstance(EnvSpec spec) : spec_(std::move(spec)) {
  if (spec_.horizon <= 0) throw ConfigError("horizon must be positive");
  if (spec_.objective.empty()) throw ConfigError("objective must be non-empty");
}

Vec2 EnvInstance::spawn_origin(double body_width) const {
  const double x0 = spec_.align == SpawnAlign::LeftEdge ? spec_.spawn_x
                                                         : spec_.spawn_x - body_width / 2;
  const double x1 = x0 + body_width;
  double ground = std::max(spec_.terrain.height_at(x0), spec_.terrain.height_at(x1));
  for (const Vec2& p : spec_.terrain.points()) {
    if (p.x > x0 && p.x < x1) ground = std::max(ground, p.y);
  }
  if (!std::isfinite(ground)) ground = 0.0;
  return {x0, ground};
}

Scene EnvInstance::scene_for(const SoftBody& body) const {
  Scene scene{spec_.terrain, std::nullopt};
  if (!spec_.box) return scene;
  const BoxPlacement& p = *spec_.box;
  double min_x = body.rest_positions.front().x;
  double max_x = min_x;
  double max_y = body.rest_positions.front().y;
  for (const Vec2& v : body.rest_positions) {
    min_x = std::min(min_x, v.x);
    max_x = std::max(max_x, v.x);
    max_y = std::max(max_y, v.y);
  }
  BoxSpec box{p.width, p.height, p.mass, {}};
  if (p.where == BoxPlacement::Where::Ahead) {
    const double cx = max_x + p.clearance + p.width / 2;
    const double ground = std::max(spec_.terrain.height_at(cx - p.width / 2),
                                   spec_.terrain.height_at(cx + p.width / 2));
    box.center = {cx, ground + p.height / 2};
  } else {
    box.center = {(min_x + max_x) / 2, max_y + p.clearance + p.height / 2};
  }
  scene.box = box;
  return scene;
}

void EnvInstance::begin(const SoftBody& body, const SimState& state) {
  body_ = &body;
  start_time_ = state.time;
  peak_height_ = com(state, body).y;
  total_ = 0.0;
}

double EnvInstance::current_target(double t) const {
  double target = spec_.goals.empty() ? 0.0 : spec_.goals.front().target_x;
  for (const Goal& g : spec_.goals) {
    if (g.time <= t) target = g.target_x;
  }
  return target;
}

double EnvInstance::reward_step(const SimState& prev, const SimState& curr) {
  const Vec2 c0 = com(prev, *body_);
  const Vec2 c1 = com(curr, *body_);
  const double dx = c1.x - c0.x;
  double r = 0.0;
  switch (spec_.rule) {
    case RewardRule::Displacement:
      r = dx;
      break;
    case RewardRule::Bidirectional: {
      const double target = current_target(curr.time - start_time_);
      r = std::abs(c0.x - target) - std::abs(c1.x - target);
      break;
    }
    case RewardRule::Push: {
      const double b0 = prev.box->position.x;
      const double b1 = curr.box->position.x;
      const double sep0 = std::abs(b0 - c0.x);
      const double sep1 = std::abs(b1 - c1.x);
      r = 0.5 * (b1 - b0) + 0.5 * dx - 0.1 * (sep1 - sep0);
      break;
    }
    case RewardRule::Carry:
      r = 0.5 * (curr.box->position.x - prev.box->position.x) + 0.5 * dx;
      break;
    case RewardRule::Jump: {
      const double peak = std::max(peak_height_, c1.y);
      r = std::max(0.0, peak - peak_height_) - 0.1 * std::abs(dx);
      peak_height_ = peak;
      break;
    }
    case RewardRule::Balance:
      r = std::abs(body_rotation(curr, *body_)) < spec_.max_tilt ? kBalanceTickReward : 0.0;
      break;
  }
  total_ += r;
  return r;
}

Termination EnvInstance::terminal(const SimState& state, int step_index) const {
  const Vec2 c = com(state, *body_);
  if (spec_.rule == RewardRule::Carry && state.box && spec_.box) {
    // Dropped once the box's bottom face sinks below the robot's centre of mass.
    if (state.box->position.y - spec_.box->height / 2 < c.y) {
      return {true, TerminalReason::TaskTerminal, "box dropped", kCarrierDropPenalty};
    }
  }
  if (spec_.fall_height && c.y < *spec_.fall_height) {
    return {true, TerminalReason::TaskTerminal, "fell", 0.0};
  }
  if (spec_.rule == RewardRule::Balance && std::abs(body_rotation(state, *body_)) >= spec_.max_tilt) {
    return {true, TerminalReason::TaskTerminal, "tipped over", 0.0};
  }
  if (step_index >= spec_.horizon) return {true, TerminalReason::Horizon, "", 0.0};
  return {};
}

}  // namespace voxbench
