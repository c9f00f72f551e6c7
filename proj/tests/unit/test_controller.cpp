#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <numbers>

#include "test_util.hpp"
#include "voxbench/episode.hpp"

using namespace voxbench;

namespace {

ControllerParams params(double f, double amp, double center, std::vector<double> phases) {
  ControllerParams p;
  p.frequency = f;
  p.amplitude = amp;
  p.center = center;
  p.phases = std::move(phases);
  return p;
}

// Smooth synthetic objective with its maximum at f = 2, phase 0 = pi.
double bowl(const ControllerParams& p) {
  return -(p.frequency - 2.0) * (p.frequency - 2.0) + std::cos(p.phases[0] - std::numbers::pi);
}

}  // namespace

TEST_CASE("action signal") {
  const ControllerParams p = params(1.0, 0.4, 1.1, {0.0, std::numbers::pi / 2});
  CHECK(action_at(p, 0.0, 0) == doctest::Approx(1.1));
  CHECK(action_at(p, 0.0, 1) == doctest::Approx(1.5));
  CHECK(action_at(p, 0.25, 0) == doctest::Approx(1.5));
  CHECK(action_at(p, 0.75, 0) == doctest::Approx(0.7));
  std::vector<double> out(2);
  actions_at(p, 0.25, out);
  CHECK(out[0] == doctest::Approx(1.5));
  CHECK(out[1] == doctest::Approx(1.1));

  // Out-of-range parameters are clamped rather than passed through.
  const ControllerParams wide = params(1.0, 0.9, 1.1, {0.0});
  CHECK(action_at(wide, 0.25, 0) == kMaxAction);
  CHECK(action_at(wide, 0.75, 0) == kMinAction);
  CHECK_THROWS_AS(wide.check(), ConfigError);
  CHECK_THROWS_AS(params(0.0, 0.4, 1.1, {}).check(), ConfigError);
  CHECK_NOTHROW(params(1.0, 0.5, 1.1, {}).check());
}

TEST_CASE("ES honours the budget exactly") {
  for (int budget : {1, 2, 8, 9, 17, 60}) {
    CAPTURE(budget);
    Rng rng(3);
    int calls = 0;
    const OptResult r = optimize_controller(
        2, [&](const ControllerParams& p) { ++calls; return bowl(p); }, budget, rng);
    CHECK(calls == budget);
    CHECK(r.evals_used == budget);
    CHECK(r.history.size() == static_cast<std::size_t>(budget));
  }
  Rng rng(3);
  CHECK_THROWS_AS(optimize_controller(2, bowl, 0, rng), BadBudget);
}

TEST_CASE("ES best is the maximum of its history and improves on a smooth bowl") {
  Rng rng(11);
  const OptResult r = optimize_controller(1, bowl, 400, rng);
  double best = -1e300;
  for (const Evaluation& e : r.history) {
    best = std::max(best, e.reward);
    CHECK(e.params.frequency >= 0.1);
    CHECK(e.params.frequency <= 5.0);
    CHECK(e.params.phases[0] >= 0.0);
    CHECK(e.params.phases[0] < 2 * std::numbers::pi);
    CHECK_NOTHROW(e.params.check());
  }
  CHECK(r.best_reward == best);
  CHECK(r.best_reward == bowl(r.best_params));
  CHECK(r.best_reward > r.history.front().reward);
  CHECK(r.best_reward > 0.95);  // optimum is 1
}

TEST_CASE("ES ties keep the incumbent") {
  Rng rng(5);
  const OptResult r = optimize_controller(3, [](const ControllerParams&) { return 1.0; }, 25, rng);
  CHECK(r.best_params == r.history.front().params);
}

TEST_CASE("ES is deterministic and thread-count independent") {
  EsConfig serial;
  EsConfig threaded;
  threaded.threads = 4;
  Rng a(77);
  Rng b(77);
  const OptResult ra = optimize_controller(4, bowl, 41, a, serial);
  const OptResult rb = optimize_controller(4, bowl, 41, b, threaded);
  CHECK(ra.best_reward == rb.best_reward);
  CHECK(ra.best_params == rb.best_params);
  REQUIRE(ra.history.size() == rb.history.size());
  for (std::size_t i = 0; i < ra.history.size(); ++i) {
    CHECK(ra.history[i].params == rb.history[i].params);
  }
}

TEST_CASE("fitness on a real design") {
  const RobotDesign d(MaterialMatrix::from_codes(
      {2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 3, 2, 2, 2}));
  const EnvInstance walker = make_env("Walker-v0");
  // A centred actuator would be mirror symmetric and go nowhere; this one
  // sits in the bottom row, off centre.
  const std::uint64_t seed = fitness_seed(1, "Walker-v0", d.matrix());
  Rng r1(seed);
  Rng r2(seed);
  const double f1 = fitness(d, walker, 50, r1);
  const double f2 = fitness(d, walker, 50, r2);
  CHECK(f1 == f2);
  std::printf("fitness(all-soft + (4,1) actuator, Walker, budget 50) = %.17g\n", f1);
  CHECK(f1 == doctest::Approx(0.23583966342706159).epsilon(1e-9));

  // fitness is the best controller reward of the same search.
  Rng r3(seed);
  const OptResult opt = optimize_controller(d, walker, 50, r3);
  CHECK(opt.best_reward == f1);
  CHECK(run_episode(d, walker, opt.best_params).total_reward == f1);

  const RobotDesign passive(MaterialMatrix::filled(Material::Rigid));
  Rng r4(seed);
  CHECK_THROWS_AS(fitness(passive, walker, 5, r4), InvalidDesign);
  Rng r5(seed);
  CHECK_THROWS_AS(fitness(d, walker, 0, r5), BadBudget);
}

TEST_CASE("a mirror-symmetric design goes nowhere") {
  const RobotDesign d(MaterialMatrix::from_codes(
      {2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 3, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2}));
  Rng rng(fitness_seed(1, "Walker-v0", d.matrix()));
  const OptResult r = optimize_controller(d, make_env("Walker-v0"), 9, rng);
  for (const Evaluation& e : r.history) CHECK(std::abs(e.reward) < 1e-9);
}

TEST_CASE("fitness_seed separates designs, envs and seeds") {
  const MaterialMatrix a = MaterialMatrix::filled(Material::Soft);
  MaterialMatrix b = a;
  b.set(0, 0, Material::Rigid);
  CHECK(fitness_seed(1, "Walker-v0", a) == fitness_seed(1, "Walker-v0", a));
  CHECK(fitness_seed(1, "Walker-v0", a) != fitness_seed(1, "Walker-v0", b));
  CHECK(fitness_seed(1, "Walker-v0", a) != fitness_seed(1, "Pusher-v0", a));
  CHECK(fitness_seed(1, "Walker-v0", a) != fitness_seed(2, "Walker-v0", a));
}
