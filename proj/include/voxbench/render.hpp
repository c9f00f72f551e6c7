#pragma once

#include <string>

#include "voxbench/envs.hpp"
#include "voxbench/physics.hpp"

namespace voxbench {

struct FrameView {
  double center_x = 0.0;
  double half_width = 0.75;
  double y_min = -0.2;
  double y_max = 1.0;
  double pixels_per_metre = 400.0;
};

/// One SVG frame: terrain, voxels coloured by material, vertices and the box.
/// `state` is in world coordinates.
std::string render_frame_svg(const RobotDesign& design, const SoftBody& body, const EnvSpec& env,
                             const SimState& state, const FrameView& view = {});

}  // namespace voxbench
