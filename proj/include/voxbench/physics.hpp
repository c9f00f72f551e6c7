#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "voxbench/design.hpp"

namespace voxbench {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
  Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
  Vec2& operator*=(double s) { x *= s; y *= s; return *this; }
  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
  friend Vec2 operator*(Vec2 a, double s) { return {a.x * s, a.y * s}; }
  friend Vec2 operator*(double s, Vec2 a) { return {a.x * s, a.y * s}; }
  friend bool operator==(Vec2, Vec2) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::sqrt(dot(a, a)); }
inline Vec2 perp(Vec2 a) { return {-a.y, a.x}; }

/// Units: metres, kilograms, seconds. Stiffness in N/m per voxel edge,
/// damping in N*s/m per spring dashpot.
struct MaterialParams {
  double voxel_size = 0.1;
  double voxel_mass = 0.1;
  double stiffness_rigid = 1.0e4;
  double stiffness_soft = 1.0e3;
  double stiffness_actuator = 1.0e3;
  double damping = 1.0;

  /// Throws ConfigError unless all fields are positive and rigid > soft.
  void check() const;
};

struct SimConfig {
  double gravity = 9.81;
  double dt = 1.0 / 1200.0;
  int substeps = 20;  // integration steps per control tick
  double contact_stiffness = 2.0e4;
  double contact_damping = 10.0;
  double friction = 0.8;
  double friction_velocity = 0.01;  // tanh regularisation scale, m/s
  double position_limit = 1.0e3;    // |coordinate| beyond this counts as blown up

  double control_dt() const { return dt * substeps; }
  void check() const;
};

inline constexpr double kMinAction = 0.6;
inline constexpr double kMaxAction = 1.6;
inline constexpr double kNeutralAction = 1.0;
inline constexpr double kDiagonalActionWeight = 0.5;

struct ActuatorBinding {
  int actuator = -1;
  double weight = 0.0;  // axis weight times this voxel's share of the spring stiffness
};

struct Spring {
  std::uint32_t a = 0;
  std::uint32_t b = 0;
  double rest = 0.0;
  double stiffness = 0.0;
  double damping = 0.0;
  std::array<ActuatorBinding, 2> bindings{};
  std::uint8_t binding_count = 0;

  /// Rest-length multiplier implied by the actuator signals.
  double multiplier(std::span<const double> actions) const {
    double m = 1.0;
    for (int i = 0; i < binding_count; ++i) {
      m += bindings[i].weight * (actions[bindings[i].actuator] - 1.0);
    }
    return m;
  }
};

/// Point masses on the shared corner lattice of the non-empty voxels.
struct SoftBody {
  std::vector<Vec2> rest_positions;
  std::vector<double> masses;
  std::vector<std::array<int, 2>> lattice;  // (row, col) corner index per vertex
  std::vector<Spring> springs;
  int actuator_count = 0;
  double width = 0.0;
  double height = 0.0;

  std::size_t vertex_count() const { return rest_positions.size(); }
  double total_mass() const;
};

/// Lattice body for a design; `origin` is the bottom-left corner of the
/// occupied bounding box.
SoftBody build_body(const RobotDesign& design, const MaterialParams& params, Vec2 origin);

/// Hookean force along a spring, positive when pushing the endpoints apart.
inline double spring_force(double rest, double current, double stiffness,
                           std::optional<double> action_multiplier = std::nullopt) {
  const double effective = rest * action_multiplier.value_or(1.0);
  return stiffness * (effective - current);
}

/// Piecewise-linear ground profile. Consecutive points may share an x
/// coordinate to form vertical walls; the solid lies below the line.
class Terrain {
 public:
  Terrain() = default;
  explicit Terrain(std::vector<Vec2> points);

  struct Contact {
    double depth = 0.0;
    Vec2 normal;  // outward, unit length
  };

  bool empty() const { return points_.size() < 2; }
  const std::vector<Vec2>& points() const { return points_; }
  double height_at(double x) const;
  std::optional<Contact> probe(Vec2 p) const;
  Terrain shifted(double dx) const;

 private:
  std::vector<Vec2> points_;
};

struct BoxSpec {
  double width = 0.2;
  double height = 0.2;
  double mass = 0.2;
  Vec2 center;

  double inertia() const { return mass * (width * width + height * height) / 12.0; }
};

struct BoxState {
  Vec2 position;
  double angle = 0.0;
  Vec2 velocity;
  double angular_velocity = 0.0;
};

struct Scene {
  Terrain terrain;
  std::optional<BoxSpec> box;
};

struct SimState {
  std::vector<Vec2> positions;
  std::vector<Vec2> velocities;
  double time = 0.0;
  std::optional<BoxState> box;
};

/// Mass-weighted mean of the vertex positions.
Vec2 com(const SimState& state, const SoftBody& body);

/// Least-squares rotation of the body relative to its rest shape, radians.
double body_rotation(const SimState& state, const SoftBody& body);

double lowest_point(const SimState& state);

/// Kinetic + gravitational + elastic energy of the robot (box excluded).
double mechanical_energy(const SoftBody& body, const SimState& state,
                         std::span<const double> actions, double gravity);

Vec2 total_momentum(const SoftBody& body, const SimState& state);

/// Semi-implicit Euler integrator over one body and one scene.
class Simulator {
 public:
  Simulator(SoftBody body, Scene scene, SimConfig config);

  const SoftBody& body() const { return body_; }
  const Scene& scene() const { return scene_; }
  const SimConfig& config() const { return config_; }

  /// Body at its rest shape, zero velocity, box at its spawn pose.
  SimState initial_state() const;

  /// One integration step. Throws NonFiniteState if the state blows up.
  SimState step(const SimState& state, std::span<const double> actions, double dt) const;

  /// One control tick (config().substeps steps of config().dt), in place.
  void advance(SimState& state, std::span<const double> actions);

 private:
  void integrate(SimState& state, std::span<const double> rest, double dt,
                 std::vector<Vec2>& forces) const;
  void effective_rest(std::span<const double> actions, std::vector<double>& rest) const;

  SoftBody body_;
  Scene scene_;
  SimConfig config_;
  std::vector<double> inv_mass_;
  std::vector<double> rest_scratch_;
  std::vector<Vec2> force_scratch_;
};

}  // namespace voxbench
