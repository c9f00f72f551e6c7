#include "voxbench/render.hpp"

#include <cstdio>
#include <map>

namespace voxbench {

namespace {

const char* fill_for(Material m) {
  switch (m) {
    case Material::Rigid: return "#3a3a3a";
    case Material::Soft: return "#bdbdbd";
    case Material::HorizontalActuator: return "#f28e2b";
    case Material::VerticalActuator: return "#4e79a7";
    case Material::Empty: break;
  }
  return "none";
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string render_frame_svg(const RobotDesign& design, const SoftBody& body, const EnvSpec& env,
                             const SimState& state, const FrameView& view) {
  const double scale = view.pixels_per_metre;
  const double x0 = view.center_x - view.half_width;
  const double y_top = view.y_max;
  const int width = static_cast<int>(2 * view.half_width * scale);
  const int height = static_cast<int>((view.y_max - view.y_min) * scale);
  auto px = [&](Vec2 p) { return num((p.x - x0) * scale) + "," + num((y_top - p.y) * scale); };

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
                    "\" height=\"" + std::to_string(height) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  const Terrain terrain = env.world_terrain();
  std::string ground;
  for (const Vec2& p : terrain.points()) ground += px(p) + " ";
  svg += "<polyline points=\"" + ground + "\" fill=\"none\" stroke=\"#2f7d32\" stroke-width=\"3\"/>\n";

  std::map<std::pair<int, int>, std::size_t> corner;
  for (std::size_t v = 0; v < body.lattice.size(); ++v) {
    corner[{body.lattice[v][0], body.lattice[v][1]}] = v;
  }
  const MaterialMatrix& m = design.matrix();
  for (int r = 0; r < kGridSize; ++r) {
    for (int c = 0; c < kGridSize; ++c) {
      if (m.empty_at(r, c)) continue;
      std::string pts;
      for (auto [dr, dc] : {std::pair{0, 0}, {0, 1}, {1, 1}, {1, 0}}) {
        pts += px(state.positions[corner.at({r + dr, c + dc})]) + " ";
      }
      svg += "<polygon points=\"" + pts + "\" fill=\"" + fill_for(m.at(r, c)) +
             "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    }
  }
  for (const Vec2& p : state.positions) {
    const std::string xy = px(p);
    const auto comma = xy.find(',');
    svg += "<circle cx=\"" + xy.substr(0, comma) + "\" cy=\"" + xy.substr(comma + 1) +
           "\" r=\"2\" fill=\"black\"/>\n";
  }
  if (state.box && env.box) {
    const double w = env.box->width;
    const double h = env.box->height;
    const double ca = std::cos(state.box->angle);
    const double sa = std::sin(state.box->angle);
    std::string pts;
    for (auto [sx, sy] : {std::pair{-1, -1}, {1, -1}, {1, 1}, {-1, 1}}) {
      const Vec2 local{sx * w / 2, sy * h / 2};
      pts += px(state.box->position + Vec2{ca * local.x - sa * local.y, sa * local.x + ca * local.y}) +
             " ";
    }
    svg += "<polygon points=\"" + pts + "\" fill=\"#a0522d\" stroke=\"black\"/>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace voxbench
