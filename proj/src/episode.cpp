#include "voxbench/episode.hpp"

#include <cmath>

namespace voxbench {

namespace {

SimState to_world(const EnvSpec& spec, SimState s) {
  if (spec.origin_x == 0.0) return s;
  for (Vec2& p : s.positions) p = spec.to_world(p);
  if (s.box) s.box->position = spec.to_world(s.box->position);
  return s;
}

}  // namespace

EpisodeResult run_episode(const RobotDesign& design, const EnvInstance& env_template,
                          const ControllerParams& controller, int horizon,
                          const EpisodeOptions& options) {
  if (horizon <= 0) throw ConfigError("horizon must be positive");
  const int n_act = actuator_count(design);
  if (static_cast<int>(controller.phases.size()) != n_act) {
    throw ConfigError("controller has " + std::to_string(controller.phases.size()) +
                      " phases for " + std::to_string(n_act) + " actuators");
  }
  EnvSpec spec = env_template.spec();
  spec.horizon = horizon;
  EnvInstance env(std::move(spec));
  const SoftBody probe = build_body(design, options.material, {0.0, 0.0});
  SoftBody body = build_body(design, options.material, env.spawn_origin(probe.width));
  Scene scene = env.scene_for(body);
  Simulator sim(std::move(body), std::move(scene), options.sim);

  EpisodeResult result;
  SimState state = sim.initial_state();
  std::vector<double> actions(n_act, kNeutralAction);

  auto blow_up = [&](const std::string& what) {
    result.reason = TerminalReason::Instability;
    result.detail = what;
    double sum = 0.0;
    for (double r : result.reward_trace) sum += r;
    result.total_reward = options.reward_floor;
    result.terminal_adjustment = options.reward_floor - sum;
    result.final_state = to_world(env.spec(), state);
    return result;
  };

  const int settle_ticks =
      static_cast<int>(std::lround(env.spec().settle_time / options.sim.control_dt()));
  try {
    for (int i = 0; i < settle_ticks; ++i) sim.advance(state, actions);
  } catch (const NonFiniteState& e) {
    return blow_up(e.what());
  }

  env.begin(sim.body(), state);
  result.com_start = env.spec().to_world(com(state, sim.body()));
  result.reward_trace.reserve(horizon);
  const double t0 = state.time;
  SimState prev;
  for (int tick = 0; tick < horizon; ++tick) {
    if (options.on_frame) {
      options.on_frame(tick, env.spec().origin_x == 0.0 ? state : to_world(env.spec(), state));
    }
    actions_at(controller, state.time - t0, actions);
    prev = state;
    try {
      sim.advance(state, actions);
    } catch (const NonFiniteState& e) {
      return blow_up(e.what());
    }
    result.reward_trace.push_back(env.reward_step(prev, state));
    result.steps = tick + 1;
    const Termination term = env.terminal(state, tick + 1);
    if (term.done || tick + 1 == horizon) {
      result.reason = term.done ? term.reason : TerminalReason::Horizon;
      result.detail = term.detail;
      result.terminal_adjustment = term.adjustment;
      env.finish(term);
      break;
    }
  }
  result.total_reward = env.total();
  result.com_end = env.spec().to_world(com(state, sim.body()));
  result.final_state = to_world(env.spec(), std::move(state));
  return result;
}

EpisodeResult run_episode(const RobotDesign& design, const EnvInstance& env,
                          const ControllerParams& controller, const EpisodeOptions& options) {
  return run_episode(design, env, controller, env.spec().horizon, options);
}

OptResult optimize_controller(const RobotDesign& design, const EnvInstance& env, int budget,
                              Rng& rng, const FitnessSetup& setup) {
  auto evaluate = [&](const ControllerParams& p) {
    return run_episode(design, env, p, setup.episode).total_reward;
  };
  return optimize_controller(actuator_count(design), evaluate, budget, rng, setup.es);
}

double fitness(const RobotDesign& design, const EnvInstance& env, int budget, Rng& rng,
               const FitnessSetup& setup) {
  if (!validate(design.matrix()).valid) {
    throw InvalidDesign("fitness requires a valid design (connected, with an actuator)");
  }
  return optimize_controller(design, env, budget, rng, setup).best_reward;
}

std::uint64_t fitness_seed(std::uint64_t global_seed, std::string_view env_id,
                           const MaterialMatrix& design) {
  const std::uint64_t stream = derive_seed(derive_seed(global_seed, "fitness"), env_id);
  return derive_seed(stream, design_hash(design));
}

}  // namespace voxbench
