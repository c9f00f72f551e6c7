#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "voxbench/errors.hpp"
#include "voxbench/rng.hpp"

namespace voxbench {

inline constexpr int kGridSize = 5;
inline constexpr int kCellCount = kGridSize * kGridSize;
inline constexpr int kDefaultRetryCap = 10'000;
inline constexpr double kDefaultMutationRate = 0.10;

enum class Material : std::uint8_t {
  Empty = 0,
  Rigid = 1,
  Soft = 2,
  HorizontalActuator = 3,
  VerticalActuator = 4,
};

inline constexpr int kMaterialCount = 5;

constexpr bool is_actuator(Material m) {
  return m == Material::HorizontalActuator || m == Material::VerticalActuator;
}

/// 5x5 grid of materials, row-major, row 0 at the top.
class MaterialMatrix {
 public:
  MaterialMatrix() { cells_.fill(Material::Empty); }

  /// Builds from 25 row-major integer codes; throws InvalidDesign for codes outside 0..4.
  static MaterialMatrix from_codes(const std::array<int, kCellCount>& codes);
  static MaterialMatrix filled(Material m);

  Material at(int row, int col) const { return cells_[index(row, col)]; }
  void set(int row, int col, Material m) { cells_[index(row, col)] = m; }
  int code(int row, int col) const { return static_cast<int>(at(row, col)); }

  const std::array<Material, kCellCount>& cells() const { return cells_; }
  std::array<Material, kCellCount>& cells() { return cells_; }

  /// Canonical binary form: 25 bytes row-major.
  std::array<std::uint8_t, kCellCount> to_bytes() const;

  bool empty_at(int row, int col) const { return at(row, col) == Material::Empty; }

  /// Left-right mirror image.
  MaterialMatrix mirrored() const;

  friend bool operator==(const MaterialMatrix&, const MaterialMatrix&) = default;

 private:
  static constexpr std::size_t index(int row, int col) {
    return static_cast<std::size_t>(row * kGridSize + col);
  }
  std::array<Material, kCellCount> cells_;
};

struct ValidityReport {
  bool connected = false;
  bool nonempty = false;
  bool has_actuator = false;
  bool valid = false;
};

enum class ActuatorAxis : std::uint8_t { Horizontal, Vertical };

struct ActuatorCell {
  int row = 0;
  int col = 0;
  ActuatorAxis axis = ActuatorAxis::Horizontal;

  friend bool operator==(const ActuatorCell&, const ActuatorCell&) = default;
};

/// A connected, non-empty material matrix plus its actuator list in
/// row-major order. Actuator-free designs are representable (they are
/// simply not `valid` for evolution).
class RobotDesign {
 public:
  /// Throws InvalidDesign when the matrix is empty or not 4-connected.
  explicit RobotDesign(const MaterialMatrix& matrix);

  const MaterialMatrix& matrix() const { return matrix_; }
  const std::vector<ActuatorCell>& actuators() const { return actuators_; }

  friend bool operator==(const RobotDesign& a, const RobotDesign& b) {
    return a.matrix_ == b.matrix_;
  }

 private:
  MaterialMatrix matrix_;
  std::vector<ActuatorCell> actuators_;
};

ValidityReport validate(const MaterialMatrix& matrix);

/// Rejection-samples uniform cell draws until the matrix is valid.
RobotDesign random_design(Rng& rng, int retry_cap = kDefaultRetryCap);

/// Resamples each cell uniformly over all five codes with probability `rate`;
/// an invalid result is discarded and the whole mutation redrawn.
RobotDesign mutate(const RobotDesign& design, double rate, Rng& rng,
                   int retry_cap = kDefaultRetryCap);

int actuator_count(const MaterialMatrix& matrix);
inline int actuator_count(const RobotDesign& design) {
  return static_cast<int>(design.actuators().size());
}
int voxel_count(const MaterialMatrix& matrix);

/// FNV-1a 64 of the 25-byte canonical form.
std::uint64_t design_hash(const MaterialMatrix& matrix);
inline std::uint64_t design_hash(const RobotDesign& design) {
  return design_hash(design.matrix());
}

/// Canonical text: 5 lines of 5 space-separated digits, newline-terminated.
std::string render_matrix(const MaterialMatrix& matrix);

struct TextSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
};

enum class ParseErrorKind { NoMatrixFound, BadDimensions, BadCode };

class ParseError : public Error {
 public:
  ParseError(ParseErrorKind kind, TextSpan span, const std::string& what)
      : Error(what), kind_(kind), span_(span) {}
  ParseErrorKind kind() const { return kind_; }
  TextSpan span() const { return span_; }

 private:
  ParseErrorKind kind_;
  TextSpan span_;
};

const char* to_string(ParseErrorKind kind);

/// Extracts a 5x5 matrix from free text: either five consecutive lines of
/// digits (whitespace or comma separated) or a bracketed integer array.
/// The earliest well-formed occurrence wins; otherwise the earliest
/// malformed candidate is reported, or NoMatrixFound.
MaterialMatrix parse_matrix(std::string_view text);

}  // namespace voxbench
