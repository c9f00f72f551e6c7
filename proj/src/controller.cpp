#include "voxbench/controller.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "voxbench/parallel.hpp"
#include "voxbench/physics.hpp"

namespace voxbench {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_phase(double p) {
  p = std::fmod(p, kTwoPi);
  return p < 0.0 ? p + kTwoPi : p;
}
}  // namespace

void ControllerParams::check() const {
  if (!(amplitude >= 0.0) || center - amplitude < kMinAction - 1e-12 ||
      center + amplitude > kMaxAction + 1e-12) {
    throw ConfigError("controller center +- amplitude must stay within [0.6, 1.6]");
  }
  if (!(frequency > 0.0)) throw ConfigError("controller frequency must be positive");
}

double action_at(const ControllerParams& params, double t, std::size_t actuator) {
  const double raw =
      params.center +
      params.amplitude * std::sin(kTwoPi * params.frequency * t + params.phases[actuator]);
  return std::clamp(raw, kMinAction, kMaxAction);
}

void actions_at(const ControllerParams& params, double t, std::span<double> out) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = action_at(params, t, i);
}

OptResult optimize_controller(int actuator_count, const EpisodeFn& evaluate, int budget, Rng& rng,
                              const EsConfig& cfg) {
  if (budget < 1) throw BadBudget("controller budget must be >= 1, got " + std::to_string(budget));
  const double amp_max =
      std::min({0.5, cfg.center - kMinAction, kMaxAction - cfg.center});

  ControllerParams init;
  init.center = cfg.center;
  init.amplitude = std::min(cfg.init_amplitude, amp_max);
  init.frequency = rng.uniform(cfg.init_frequency_min, cfg.init_frequency_max);
  init.phases.resize(actuator_count);
  for (double& p : init.phases) p = rng.uniform(0.0, kTwoPi);

  OptResult result;
  result.history.push_back({init, evaluate(init)});
  result.best_params = init;
  result.best_reward = result.history.back().reward;

  while (static_cast<int>(result.history.size()) < budget) {
    const int count =
        std::min(cfg.lambda, budget - static_cast<int>(result.history.size()));
    std::vector<Evaluation> batch(count);
    for (Evaluation& cand : batch) {
      ControllerParams p = result.best_params;
      p.frequency = std::clamp(p.frequency + cfg.sigma_frequency * rng.normal(),
                               cfg.frequency_min, cfg.frequency_max);
      p.amplitude = std::clamp(p.amplitude + cfg.sigma_amplitude * rng.normal(), 0.0, amp_max);
      for (double& ph : p.phases) ph = wrap_phase(ph + cfg.sigma_phase * rng.normal());
      cand.params = std::move(p);
    }
    parallel_for(batch.size(), cfg.threads,
                 [&](std::size_t i) { batch[i].reward = evaluate(batch[i].params); });
    for (Evaluation& cand : batch) {
      if (cand.reward > result.best_reward) {
        result.best_reward = cand.reward;
        result.best_params = cand.params;
      }
      result.history.push_back(std::move(cand));
    }
  }
  result.evals_used = static_cast<int>(result.history.size());
  return result;
}

}  // namespace voxbench
