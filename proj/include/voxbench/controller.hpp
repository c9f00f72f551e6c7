#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "voxbench/design.hpp"
#include "voxbench/rng.hpp"

namespace voxbench {

/// Open-loop sinusoid shared by all actuators, one phase per actuator.
struct ControllerParams {
  double frequency = 1.0;  // Hz
  double amplitude = 0.4;
  double center = 1.1;
  std::vector<double> phases;  // radians

  /// Throws ConfigError unless center +- amplitude stays inside [0.6, 1.6].
  void check() const;
  friend bool operator==(const ControllerParams&, const ControllerParams&) = default;
};

/// clamp(center + amplitude * sin(2*pi*f*t + phase_i), 0.6, 1.6)
double action_at(const ControllerParams& params, double t, std::size_t actuator);
void actions_at(const ControllerParams& params, double t, std::span<double> out);

struct Evaluation {
  ControllerParams params;
  double reward = 0.0;
};

struct OptResult {
  ControllerParams best_params;
  double best_reward = 0.0;
  int evals_used = 0;
  std::vector<Evaluation> history;
};

/// (1+lambda) evolution strategy settings.
struct EsConfig {
  int lambda = 8;
  double sigma_frequency = 0.2;
  double sigma_phase = 0.5;
  double sigma_amplitude = 0.05;
  double init_frequency_min = 0.5;
  double init_frequency_max = 3.0;
  double init_amplitude = 0.4;
  double center = 1.1;
  double frequency_min = 0.1;
  double frequency_max = 5.0;
  int threads = 1;  // concurrent candidate evaluations
};

using EpisodeFn = std::function<double(const ControllerParams&)>;

/// Elitist (1+lambda)-ES. The first evaluation is a uniform random sample;
/// each later iteration perturbs the incumbent lambda times (fewer when the
/// budget runs out). Ties keep the incumbent, then the lowest candidate index.
OptResult optimize_controller(int actuator_count, const EpisodeFn& evaluate, int budget, Rng& rng,
                              const EsConfig& config = {});

inline constexpr int kDefaultControllerBudget = 60;

}  // namespace voxbench
