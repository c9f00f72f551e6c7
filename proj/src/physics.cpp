#include "voxbench/physics.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <tuple>

namespace voxbench {

void MaterialParams::check() const {
  const bool positive = voxel_size > 0 && voxel_mass > 0 && stiffness_rigid > 0 &&
                        stiffness_soft > 0 && stiffness_actuator > 0 && damping > 0;
  if (!positive) throw ConfigError("material parameters must be strictly positive");
  if (!(stiffness_rigid > stiffness_soft)) {
    throw ConfigError("stiffness_rigid must exceed stiffness_soft");
  }
}

void SimConfig::check() const {
  if (!(dt > 0) || substeps < 1) throw ConfigError("dt must be positive and substeps >= 1");
  if (gravity < 0 || contact_stiffness < 0 || contact_damping < 0 || friction < 0 ||
      !(friction_velocity > 0)) {
    throw ConfigError("contact/gravity parameters must be non-negative");
  }
}

double SoftBody::total_mass() const {
  double m = 0.0;
  for (double v : masses) m += v;
  return m;
}

namespace {

double stiffness_of(Material m, const MaterialParams& p) {
  switch (m) {
    case Material::Rigid: return p.stiffness_rigid;
    case Material::Soft: return p.stiffness_soft;
    case Material::HorizontalActuator:
    case Material::VerticalActuator: return p.stiffness_actuator;
    case Material::Empty: break;
  }
  return 0.0;
}

struct Contribution {
  double stiffness;
  int actuator;         // -1 when the voxel is passive
  double axis_weight;   // 1 aligned edge, 0.5 diagonal, 0 cross edge
};

}  // namespace

SoftBody build_body(const RobotDesign& design, const MaterialParams& params, Vec2 origin) {
  params.check();
  const MaterialMatrix& m = design.matrix();
  const double h = params.voxel_size;
  constexpr int L = kGridSize + 1;

  int row_max = 0;
  int col_min = kGridSize;
  std::array<bool, L * L> used{};
  for (int r = 0; r < kGridSize; ++r) {
    for (int c = 0; c < kGridSize; ++c) {
      if (m.empty_at(r, c)) continue;
      row_max = std::max(row_max, r);
      col_min = std::min(col_min, c);
      for (int dr = 0; dr < 2; ++dr) {
        for (int dc = 0; dc < 2; ++dc) used[(r + dr) * L + c + dc] = true;
      }
    }
  }

  SoftBody body;
  std::array<int, L * L> vid{};
  vid.fill(-1);
  int row_min = kGridSize;
  int col_max = 0;
  for (int r = 0; r < L; ++r) {
    for (int c = 0; c < L; ++c) {
      if (!used[r * L + c]) continue;
      vid[r * L + c] = static_cast<int>(body.rest_positions.size());
      body.rest_positions.push_back(
          {origin.x + (c - col_min) * h, origin.y + (row_max + 1 - r) * h});
      body.masses.push_back(0.0);
      body.lattice.push_back({r, c});
      row_min = std::min(row_min, r);
      col_max = std::max(col_max, c);
    }
  }
  body.width = (col_max - col_min) * h;
  body.height = (row_max + 1 - row_min) * h;

  // Springs keyed by endpoint pair so shared voxel edges merge.
  std::map<std::pair<int, int>, std::size_t> index;
  std::vector<std::vector<Contribution>> contributions;
  auto add = [&](int ra, int ca, int rb, int cb, Contribution contrib) {
    int a = vid[ra * L + ca];
    int b = vid[rb * L + cb];
    if (a > b) std::swap(a, b);
    auto [it, inserted] = index.try_emplace({a, b}, body.springs.size());
    if (inserted) {
      Spring s;
      s.a = static_cast<std::uint32_t>(a);
      s.b = static_cast<std::uint32_t>(b);
      s.rest = norm(body.rest_positions[b] - body.rest_positions[a]);
      body.springs.push_back(s);
      contributions.emplace_back();
    }
    Spring& s = body.springs[it->second];
    s.stiffness += contrib.stiffness;
    s.damping += params.damping;
    contributions[it->second].push_back(contrib);
  };

  int actuator = 0;
  for (int r = 0; r < kGridSize; ++r) {
    for (int c = 0; c < kGridSize; ++c) {
      const Material mat = m.at(r, c);
      if (mat == Material::Empty) continue;
      const double k = stiffness_of(mat, params);
      const int act = is_actuator(mat) ? actuator++ : -1;
      const double horizontal = mat == Material::HorizontalActuator ? 1.0 : 0.0;
      const double vertical = mat == Material::VerticalActuator ? 1.0 : 0.0;
      const double diagonal = act >= 0 ? kDiagonalActionWeight : 0.0;
      add(r, c, r, c + 1, {k, act, horizontal});
      add(r + 1, c, r + 1, c + 1, {k, act, horizontal});
      add(r, c, r + 1, c, {k, act, vertical});
      add(r, c + 1, r + 1, c + 1, {k, act, vertical});
      add(r, c, r + 1, c + 1, {k, act, diagonal});
      add(r, c + 1, r + 1, c, {k, act, diagonal});
      const double quarter = params.voxel_mass / 4.0;
      body.masses[vid[r * L + c]] += quarter;
      body.masses[vid[r * L + c + 1]] += quarter;
      body.masses[vid[(r + 1) * L + c]] += quarter;
      body.masses[vid[(r + 1) * L + c + 1]] += quarter;
    }
  }
  body.actuator_count = actuator;

  for (std::size_t i = 0; i < body.springs.size(); ++i) {
    Spring& s = body.springs[i];
    for (const Contribution& c : contributions[i]) {
      if (c.actuator < 0 || c.axis_weight == 0.0) continue;
      s.bindings[s.binding_count++] = {c.actuator, c.axis_weight * c.stiffness / s.stiffness};
    }
  }
  return body;
}

Terrain::Terrain(std::vector<Vec2> points) : points_(std::move(points)) {
  for (std::size_t i = 1; i < points_.size(); ++i) {
    if (points_[i].x < points_[i - 1].x) {
      throw ConfigError("terrain points must have non-decreasing x");
    }
  }
}

double Terrain::height_at(double x) const {
  constexpr double kNone = -std::numeric_limits<double>::infinity();
  if (empty()) return kNone;
  auto by_x = [](const Vec2& p, double v) { return p.x < v; };
  auto lo = std::lower_bound(points_.begin(), points_.end(), x, by_x);
  auto hi = std::upper_bound(points_.begin(), points_.end(), x,
                             [](double v, const Vec2& p) { return v < p.x; });
  if (lo != hi) {
    double h = kNone;
    for (auto it = lo; it != hi; ++it) h = std::max(h, it->y);
    return h;
  }
  if (hi == points_.begin() || hi == points_.end()) return kNone;
  const Vec2 a = *(hi - 1);
  const Vec2 b = *hi;
  const double t = (x - a.x) / (b.x - a.x);
  return a.y + t * (b.y - a.y);
}

std::optional<Terrain::Contact> Terrain::probe(Vec2 p) const {
  const double h = height_at(p.x);
  if (!(p.y < h)) return std::nullopt;
  // The nearest surface point is no farther than the vertical drop to the surface.
  const double reach = h - p.y;
  auto first = std::lower_bound(points_.begin(), points_.end(), p.x - reach,
                                [](const Vec2& q, double v) { return q.x < v; });
  std::size_t i = first == points_.begin() ? 0 : static_cast<std::size_t>(first - points_.begin()) - 1;
  Contact best{std::numeric_limits<double>::infinity(), {0.0, 1.0}};
  for (; i + 1 < points_.size() && points_[i].x <= p.x + reach; ++i) {
    const Vec2 a = points_[i];
    const Vec2 b = points_[i + 1];
    const Vec2 ab = b - a;
    const double len2 = dot(ab, ab);
    if (len2 <= 0.0) continue;
    const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
    const Vec2 q = a + ab * t;
    const Vec2 d = q - p;
    const double dist = norm(d);
    if (dist < best.depth) {
      best.depth = dist;
      best.normal = dist > 1e-12 ? d * (1.0 / dist) : perp(ab) * (1.0 / std::sqrt(len2));
    }
  }
  if (!std::isfinite(best.depth)) return std::nullopt;
  return best;
}

Terrain Terrain::shifted(double dx) const {
  std::vector<Vec2> pts = points_;
  for (auto& p : pts) p.x += dx;
  return Terrain(std::move(pts));
}

Vec2 com(const SimState& state, const SoftBody& body) {
  Vec2 sum;
  double mass = 0.0;
  for (std::size_t i = 0; i < state.positions.size(); ++i) {
    sum += state.positions[i] * body.masses[i];
    mass += body.masses[i];
  }
  return sum * (1.0 / mass);
}

double body_rotation(const SimState& state, const SoftBody& body) {
  const Vec2 c = com(state, body);
  SimState rest;
  rest.positions = body.rest_positions;
  const Vec2 c0 = com(rest, body);
  double s = 0.0;
  double k = 0.0;
  for (std::size_t i = 0; i < state.positions.size(); ++i) {
    const Vec2 r0 = body.rest_positions[i] - c0;
    const Vec2 r = state.positions[i] - c;
    s += body.masses[i] * cross(r0, r);
    k += body.masses[i] * dot(r0, r);
  }
  return std::atan2(s, k);
}

double lowest_point(const SimState& state) {
  double y = std::numeric_limits<double>::infinity();
  for (const Vec2& p : state.positions) y = std::min(y, p.y);
  return y;
}

double mechanical_energy(const SoftBody& body, const SimState& state,
                         std::span<const double> actions, double gravity) {
  double e = 0.0;
  for (std::size_t i = 0; i < body.vertex_count(); ++i) {
    e += 0.5 * body.masses[i] * dot(state.velocities[i], state.velocities[i]);
    e += body.masses[i] * gravity * state.positions[i].y;
  }
  for (const Spring& s : body.springs) {
    const double stretch = norm(state.positions[s.b] - state.positions[s.a]) -
                           s.rest * s.multiplier(actions);
    e += 0.5 * s.stiffness * stretch * stretch;
  }
  return e;
}

Vec2 total_momentum(const SoftBody& body, const SimState& state) {
  Vec2 p;
  for (std::size_t i = 0; i < body.vertex_count(); ++i) p += state.velocities[i] * body.masses[i];
  return p;
}

Simulator::Simulator(SoftBody body, Scene scene, SimConfig config)
    : body_(std::move(body)), scene_(std::move(scene)), config_(config) {
  config_.check();
  inv_mass_.reserve(body_.masses.size());
  for (double m : body_.masses) inv_mass_.push_back(1.0 / m);
}

SimState Simulator::initial_state() const {
  SimState s;
  s.positions = body_.rest_positions;
  s.velocities.assign(body_.vertex_count(), Vec2{});
  if (scene_.box) s.box = BoxState{scene_.box->center, 0.0, {}, 0.0};
  return s;
}

void Simulator::effective_rest(std::span<const double> actions, std::vector<double>& rest) const {
  if (static_cast<int>(actions.size()) != body_.actuator_count) {
    throw ConfigError("action vector length " + std::to_string(actions.size()) +
                      " does not match actuator count " + std::to_string(body_.actuator_count));
  }
  double clamped[kCellCount];
  for (std::size_t i = 0; i < actions.size(); ++i) {
    clamped[i] = std::clamp(actions[i], kMinAction, kMaxAction);
  }
  const std::span<const double> acts(clamped, actions.size());
  rest.resize(body_.springs.size());
  for (std::size_t i = 0; i < body_.springs.size(); ++i) {
    const Spring& s = body_.springs[i];
    rest[i] = s.binding_count == 0 ? s.rest : s.rest * s.multiplier(acts);
  }
}

SimState Simulator::step(const SimState& state, std::span<const double> actions, double dt) const {
  std::vector<double> rest;
  effective_rest(actions, rest);
  std::vector<Vec2> forces;
  SimState next = state;
  integrate(next, rest, dt, forces);
  return next;
}

void Simulator::advance(SimState& state, std::span<const double> actions) {
  effective_rest(actions, rest_scratch_);
  for (int i = 0; i < config_.substeps; ++i) {
    integrate(state, rest_scratch_, config_.dt, force_scratch_);
  }
}

namespace {

// Penalty normal force plus tanh-regularised Coulomb friction. `v` is the
// velocity of the point relative to the surface; `mass` bounds the
// friction impulse so a step can stop sliding but never reverse it.
Vec2 contact_force(const Terrain::Contact& c, Vec2 v, double mass, double dt,
                   const SimConfig& cfg) {
  const double vn = dot(v, c.normal);
  const double fn = std::max(0.0, cfg.contact_stiffness * c.depth - cfg.contact_damping * vn);
  const Vec2 t = perp(c.normal);
  const double vt = dot(v, t);
  double ft = cfg.friction * fn * std::tanh(std::abs(vt) / cfg.friction_velocity);
  ft = std::min(ft, mass * std::abs(vt) / dt);
  return c.normal * fn - t * std::copysign(ft, vt);
}

bool finite_within(Vec2 v, double limit) {
  return std::isfinite(v.x) && std::isfinite(v.y) && std::abs(v.x) < limit &&
         std::abs(v.y) < limit;
}

}  // namespace

void Simulator::integrate(SimState& state, std::span<const double> rest, double dt,
                          std::vector<Vec2>& forces) const {
  const std::size_t n = body_.vertex_count();
  auto& pos = state.positions;
  auto& vel = state.velocities;
  forces.assign(n, Vec2{});

  for (std::size_t i = 0; i < body_.springs.size(); ++i) {
    const Spring& s = body_.springs[i];
    const Vec2 d = pos[s.b] - pos[s.a];
    const double len = norm(d);
    if (len < 1e-12) continue;
    const Vec2 u = d * (1.0 / len);
    const double closing = dot(vel[s.b] - vel[s.a], u);
    const double f = spring_force(rest[i], len, s.stiffness) - s.damping * closing;
    forces[s.a] -= u * f;
    forces[s.b] += u * f;
  }

  for (std::size_t i = 0; i < n; ++i) {
    forces[i].y -= body_.masses[i] * config_.gravity;
    if (auto c = scene_.terrain.probe(pos[i])) {
      forces[i] += contact_force(*c, vel[i], body_.masses[i], dt, config_);
    }
  }

  Vec2 box_force;
  double box_torque = 0.0;
  if (state.box && scene_.box) {
    const BoxSpec& spec = *scene_.box;
    BoxState& box = *state.box;
    const double ca = std::cos(box.angle);
    const double sa = std::sin(box.angle);
    const double hw = spec.width / 2;
    const double hh = spec.height / 2;
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 r = pos[i] - box.position;
      const Vec2 local{ca * r.x + sa * r.y, -sa * r.x + ca * r.y};
      if (std::abs(local.x) >= hw || std::abs(local.y) >= hh) continue;
      const double dx = hw - std::abs(local.x);
      const double dy = hh - std::abs(local.y);
      const Vec2 n_local = dx < dy ? Vec2{std::copysign(1.0, local.x), 0.0}
                                   : Vec2{0.0, std::copysign(1.0, local.y)};
      const Terrain::Contact c{std::min(dx, dy),
                               {ca * n_local.x - sa * n_local.y, sa * n_local.x + ca * n_local.y}};
      const Vec2 point_vel = box.velocity + perp(r) * box.angular_velocity;
      const Vec2 f = contact_force(c, vel[i] - point_vel, std::min(body_.masses[i], spec.mass),
                                   dt, config_);
      forces[i] += f;
      box_force -= f;
      box_torque -= cross(r, f);
    }
    box_force.y -= spec.mass * config_.gravity;
    for (int k = 0; k < 4; ++k) {
      const Vec2 corner_local{(k & 1) ? hw : -hw, (k & 2) ? hh : -hh};
      const Vec2 r{ca * corner_local.x - sa * corner_local.y,
                   sa * corner_local.x + ca * corner_local.y};
      if (auto c = scene_.terrain.probe(box.position + r)) {
        const Vec2 point_vel = box.velocity + perp(r) * box.angular_velocity;
        const Vec2 f = contact_force(*c, point_vel, spec.mass / 4.0, dt, config_);
        box_force += f;
        box_torque += cross(r, f);
      }
    }
  }

  const double limit = config_.position_limit;
  bool ok = true;
  for (std::size_t i = 0; i < n; ++i) {
    vel[i] += forces[i] * (inv_mass_[i] * dt);
    pos[i] += vel[i] * dt;
    ok = ok && finite_within(pos[i], limit) && finite_within(vel[i], limit * 1e3);
  }
  if (state.box && scene_.box) {
    BoxState& box = *state.box;
    box.velocity += box_force * (dt / scene_.box->mass);
    box.angular_velocity += box_torque * (dt / scene_.box->inertia());
    box.position += box.velocity * dt;
    box.angle += box.angular_velocity * dt;
    ok = ok && finite_within(box.position, limit) && std::isfinite(box.angle) &&
         std::isfinite(box.angular_velocity);
  }
  state.time += dt;
  if (!ok) throw NonFiniteState("simulation state left the finite range at t=" +
                                std::to_string(state.time));
}

}  // namespace voxbench
