#include <doctest.h>

#include <cmath>

#include "test_util.hpp"
#include "voxbench/episode.hpp"

using namespace voxbench;

namespace {

double max_speed(const SimState& s) {
  double v = 0.0;
  for (const Vec2& u : s.velocities) v = std::max(v, norm(u));
  return v;
}

ControllerParams phases_for(const RobotDesign& d, Rng& rng, double freq = 2.0) {
  ControllerParams p;
  p.frequency = freq;
  for (int i = 0; i < actuator_count(d); ++i) p.phases.push_back(rng.uniform(0.0, 6.283));
  return p;
}

// Phases re-indexed so that actuator (r, c) of the mirror gets the phase of (r, 4 - c).
ControllerParams mirrored_params(const RobotDesign& d, const RobotDesign& m,
                                 const ControllerParams& p) {
  ControllerParams out = p;
  for (std::size_t i = 0; i < m.actuators().size(); ++i) {
    const auto& a = m.actuators()[i];
    for (std::size_t j = 0; j < d.actuators().size(); ++j) {
      const auto& b = d.actuators()[j];
      if (b.row == a.row && b.col == kGridSize - 1 - a.col) out.phases[i] = p.phases[j];
    }
  }
  return out;
}

}  // namespace

TEST_CASE("config validation") {
  MaterialParams m;
  CHECK_NOTHROW(m.check());
  m.stiffness_soft = m.stiffness_rigid;
  CHECK_THROWS_AS(m.check(), ConfigError);
  m = {};
  m.voxel_mass = 0;
  CHECK_THROWS_AS(m.check(), ConfigError);
  SimConfig s;
  s.dt = -1;
  CHECK_THROWS_AS(s.check(), ConfigError);
}

TEST_CASE("lattice construction") {
  const RobotDesign one(testutil::grid("2 0 0 0 0\n0 0 0 0 0\n0 0 0 0 0\n0 0 0 0 0\n0 0 0 0 0\n"));
  const SoftBody b1 = build_body(one, {}, {0, 0});
  CHECK(b1.vertex_count() == 4);
  CHECK(b1.springs.size() == 6);
  CHECK(b1.total_mass() == doctest::Approx(0.1));
  CHECK(b1.width == doctest::Approx(0.1));

  // Two voxels side by side share one edge: 6 vertices, 4+4+2 diagonals - 1 shared = 11 springs.
  const RobotDesign two(testutil::grid("0 0 0 0 0\n0 0 0 0 0\n0 0 0 0 0\n0 0 0 0 0\n0 3 1 0 0\n"));
  const SoftBody b2 = build_body(two, {}, {1.0, 0.0});
  CHECK(b2.vertex_count() == 6);
  CHECK(b2.springs.size() == 11);
  double lowest = 1e9;
  double leftmost = 1e9;
  for (const Vec2& p : b2.rest_positions) {
    lowest = std::min(lowest, p.y);
    leftmost = std::min(leftmost, p.x);
  }
  CHECK(lowest == doctest::Approx(0.0));
  CHECK(leftmost == doctest::Approx(1.0));
}

TEST_CASE("actuator multiplier weights") {
  const RobotDesign d(testutil::grid("3 0 0 0 0\n0 0 0 0 0\n0 0 0 0 0\n0 0 0 0 0\n0 0 0 0 0\n"));
  const SoftBody b = build_body(d, {}, {0, 0});
  const std::vector<double> act{1.6};
  int horizontal = 0;
  int vertical = 0;
  int diagonal = 0;
  for (const Spring& s : b.springs) {
    const Vec2 delta = b.rest_positions[s.b] - b.rest_positions[s.a];
    const double m = s.multiplier(act);
    if (std::abs(delta.y) < 1e-12) {
      CHECK(m == doctest::Approx(1.6));
      ++horizontal;
    } else if (std::abs(delta.x) < 1e-12) {
      CHECK(m == doctest::Approx(1.0));  // a horizontal actuator leaves vertical edges alone
      ++vertical;
    } else {
      CHECK(m == doctest::Approx(1.3));  // diagonal weight 0.5
      ++diagonal;
    }
  }
  CHECK(horizontal == 2);
  CHECK(vertical == 2);
  CHECK(diagonal == 2);
  CHECK(spring_force(0.1, 0.1, 1000.0) == doctest::Approx(0.0));
  CHECK(spring_force(0.1, 0.1, 1000.0, 1.5) == doctest::Approx(50.0));
}

TEST_CASE("terrain probe") {
  const Terrain flat({{-10, 0}, {10, 0}});
  CHECK_FALSE(flat.probe({0, 0.01}).has_value());
  auto c = flat.probe({0.5, -0.02});
  REQUIRE(c.has_value());
  CHECK(c->depth == doctest::Approx(0.02));
  CHECK(c->normal.y == doctest::Approx(1.0));
  const Terrain step({{-10, 0}, {1, 0}, {1, 0.5}, {10, 0.5}});
  CHECK(step.height_at(0.0) == doctest::Approx(0.0));
  CHECK(step.height_at(2.0) == doctest::Approx(0.5));
  CHECK(step.shifted(1.0).height_at(1.5) == doctest::Approx(0.0));
}

TEST_CASE("determinism: repeated episodes are bit-identical") {
  Rng rng(8);
  const RobotDesign d = random_design(rng);
  const ControllerParams p = phases_for(d, rng);
  const EnvInstance env = make_env("Walker-v0", {.horizon = 200});
  const EpisodeResult a = run_episode(d, env, p);
  const EpisodeResult b = run_episode(d, env, p);
  CHECK(a.total_reward == b.total_reward);
  CHECK(a.reward_trace == b.reward_trace);
  REQUIRE(a.final_state.positions.size() == b.final_state.positions.size());
  for (std::size_t i = 0; i < a.final_state.positions.size(); ++i) {
    CHECK(a.final_state.positions[i] == b.final_state.positions[i]);
  }
}

TEST_CASE("a single voxel dropped on flat ground settles") {
  const RobotDesign one(testutil::grid("2 0 0 0 0\n0 0 0 0 0\n0 0 0 0 0\n0 0 0 0 0\n0 0 0 0 0\n"));
  const MaterialParams mp;
  Simulator sim(build_body(one, mp, {0.0, 0.2}), Scene{make_env("Walker-v0").spec().terrain, {}},
                SimConfig{});
  SimState s = sim.initial_state();
  const std::vector<double> none;
  for (int t = 0; t < 120; ++t) sim.advance(s, none);  // 2 s
  CHECK(-lowest_point(s) < 0.02 * mp.voxel_size);
  CHECK(max_speed(s) < 1e-3);
}

TEST_CASE("the full rigid block rests without tunnelling") {
  const RobotDesign block(MaterialMatrix::filled(Material::Rigid));
  const MaterialParams mp;
  Simulator sim(build_body(block, mp, {0.0, 0.0}), Scene{make_env("Walker-v0").spec().terrain, {}},
                SimConfig{});
  SimState s = sim.initial_state();
  const std::vector<double> none;
  double deepest = 0.0;
  for (int t = 0; t < 120; ++t) {
    sim.advance(s, none);
    deepest = std::max(deepest, -lowest_point(s));
  }
  CHECK(deepest < 0.02 * mp.voxel_size);
  CHECK(max_speed(s) < 1e-3);
}

TEST_CASE("mirror symmetry of displacement on flat ground") {
  Rng rng(21);
  const EnvInstance env = make_env("Walker-v0");
  for (int k = 0; k < 4; ++k) {
    const RobotDesign d = random_design(rng);
    const RobotDesign m(d.matrix().mirrored());
    const ControllerParams p = phases_for(d, rng);
    const double dx = run_episode(d, env, p).displacement().x;
    const double mx = run_episode(m, env, mirrored_params(d, m, p)).displacement().x;
    CHECK(std::abs(dx + mx) <= 0.01 * std::abs(dx));
  }
}

TEST_CASE("momentum is conserved without external forces") {
  Rng rng(4);
  const RobotDesign d = random_design(rng);
  SimConfig sc;
  sc.gravity = 0.0;
  Simulator sim(build_body(d, {}, {0, 0}), Scene{}, sc);
  SimState s = sim.initial_state();
  std::vector<double> act(actuator_count(d));
  double drift = 0.0;
  for (int t = 0; t < 200; ++t) {
    for (double& a : act) a = rng.uniform(kMinAction, kMaxAction);
    sim.advance(s, act);
    drift = std::max(drift, norm(total_momentum(sim.body(), s)));
  }
  CHECK(drift < 1e-9);
}

TEST_CASE("energy does not grow in free flight under neutral actions") {
  Rng rng(4);
  const RobotDesign d = random_design(rng);
  const SimConfig sc;
  Simulator sim(build_body(d, {}, {0, 5}), Scene{}, sc);
  SimState s = sim.initial_state();
  for (Vec2& p : s.positions) p += Vec2{rng.uniform(-0.01, 0.01), rng.uniform(-0.01, 0.01)};
  const std::vector<double> act(actuator_count(d), kNeutralAction);
  double e = mechanical_energy(sim.body(), s, act, sc.gravity);
  const double e0 = e;
  for (int t = 0; t < 60; ++t) {
    sim.advance(s, act);
    const double next = mechanical_energy(sim.body(), s, act, sc.gravity);
    CHECK(next <= e);
    e = next;
  }
  CHECK(e < e0);
}

TEST_CASE("blow-ups raise NonFiniteState and episodes floor the reward") {
  Rng rng(2);
  const RobotDesign d = random_design(rng);
  SimConfig sc;
  sc.dt = 0.05;  // far beyond the stable step
  Simulator sim(build_body(d, {}, {0, 0}), Scene{make_env("Walker-v0").spec().terrain, {}}, sc);
  SimState s = sim.initial_state();
  const std::vector<double> act(actuator_count(d), kMaxAction);
  CHECK_THROWS_AS(
      [&] {
        for (int t = 0; t < 200; ++t) sim.advance(s, act);
      }(),
      NonFiniteState);

  EpisodeOptions opts;
  opts.sim = sc;
  ControllerParams p;
  p.phases.assign(actuator_count(d), 0.0);
  const EpisodeResult r = run_episode(d, make_env("Walker-v0"), p, opts);
  CHECK(r.reason == TerminalReason::Instability);
  CHECK(r.total_reward == kDefaultRewardFloor);
  double sum = 0.0;
  for (double x : r.reward_trace) sum += x;
  CHECK(sum + r.terminal_adjustment == doctest::Approx(r.total_reward));
}

TEST_CASE("zero-amplitude controller does not locomote") {
  Rng rng(17);
  const EnvInstance env = make_env("Walker-v0");
  for (int k = 0; k < 5; ++k) {
    const RobotDesign d = random_design(rng);
    ControllerParams p;
    p.amplitude = 0.0;
    p.phases.assign(actuator_count(d), 0.0);
    CHECK(std::abs(run_episode(d, env, p).total_reward) < 0.05);
  }
}

TEST_CASE("shifting the scene shifts trajectories and leaves rewards unchanged") {
  Rng rng(11);
  for (int k = 0; k < 4; ++k) {
    const RobotDesign d = random_design(rng);
    const ControllerParams p = phases_for(d, rng);
    const EnvInstance base = make_env("Walker-v0");
    const EnvInstance moved = make_env("Walker-v0", {.scene_offset = 0.37});
    const EpisodeResult a = run_episode(d, base, p);
    const EpisodeResult b = run_episode(d, moved, p);
    CHECK(std::abs(a.total_reward - b.total_reward) <= 1e-9);
    CHECK(b.com_start.x - a.com_start.x == doctest::Approx(0.37).epsilon(1e-12));
    CHECK(b.com_end.x - a.com_end.x == doctest::Approx(0.37).epsilon(1e-12));
    for (std::size_t i = 0; i < a.final_state.positions.size(); ++i) {
      CHECK(b.final_state.positions[i].x - a.final_state.positions[i].x ==
            doctest::Approx(0.37).epsilon(1e-12));
      CHECK(b.final_state.positions[i].y == a.final_state.positions[i].y);
    }
  }
}

TEST_CASE("body rotation of a rigidly turned body") {
  const RobotDesign d(MaterialMatrix::filled(Material::Soft));
  const SoftBody body = build_body(d, {}, {0, 0});
  SimState s;
  const double angle = 0.3;
  for (const Vec2& p : body.rest_positions) {
    s.positions.push_back({std::cos(angle) * p.x - std::sin(angle) * p.y + 2.0,
                           std::sin(angle) * p.x + std::cos(angle) * p.y});
  }
  s.velocities.assign(s.positions.size(), Vec2{});
  CHECK(body_rotation(s, body) == doctest::Approx(angle));
}
