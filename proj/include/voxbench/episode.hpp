#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "voxbench/controller.hpp"
#include "voxbench/envs.hpp"
#include "voxbench/physics.hpp"

namespace voxbench {

inline constexpr double kDefaultRewardFloor = -10.0;

struct EpisodeOptions {
  MaterialParams material;
  SimConfig sim;
  double reward_floor = kDefaultRewardFloor;
  /// Called with (tick, state) before each control tick; tick 0 is the settled pose.
  std::function<void(int, const SimState&)> on_frame;
};

struct EpisodeResult {
  double total_reward = 0.0;
  std::vector<double> reward_trace;
  double terminal_adjustment = 0.0;
  TerminalReason reason = TerminalReason::None;
  std::string detail;
  SimState final_state;
  Vec2 com_start;
  Vec2 com_end;
  int steps = 0;

  Vec2 displacement() const { return com_end - com_start; }
};

/// Spawns the design in a fresh copy of `env`, settles it under neutral
/// actions, then drives it with `controller` for up to `horizon` ticks.
/// A blown-up simulation ends the episode at the reward floor.
EpisodeResult run_episode(const RobotDesign& design, const EnvInstance& env,
                          const ControllerParams& controller, int horizon,
                          const EpisodeOptions& options = {});
EpisodeResult run_episode(const RobotDesign& design, const EnvInstance& env,
                          const ControllerParams& controller, const EpisodeOptions& options = {});

/// Everything that fixes how a design is scored in one environment.
struct FitnessSetup {
  EpisodeOptions episode;
  EsConfig es;
};

OptResult optimize_controller(const RobotDesign& design, const EnvInstance& env, int budget,
                              Rng& rng, const FitnessSetup& setup = {});

/// Best reward reached by the controller search: the P stored in archives.
double fitness(const RobotDesign& design, const EnvInstance& env, int budget, Rng& rng,
               const FitnessSetup& setup = {});

/// Seed for scoring `design` in `env_id`: any stage that scores the same
/// design with the same global seed gets the same controller search.
std::uint64_t fitness_seed(std::uint64_t global_seed, std::string_view env_id,
                           const MaterialMatrix& design);

}  // namespace voxbench
