#include "voxbench/io.hpp"

#include <fstream>
#include <sstream>

namespace voxbench {

OrderedJson matrix_to_json(const MaterialMatrix& m) {
  OrderedJson rows = OrderedJson::array();
  for (int r = 0; r < kGridSize; ++r) {
    OrderedJson row = OrderedJson::array();
    for (int c = 0; c < kGridSize; ++c) row.push_back(m.code(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

MaterialMatrix matrix_from_json(const Json& j) {
  if (!j.is_array() || j.size() != kGridSize) throw InvalidDesign("design must be a 5x5 array");
  std::array<int, kCellCount> codes{};
  for (int r = 0; r < kGridSize; ++r) {
    const Json& row = j[r];
    if (!row.is_array() || row.size() != kGridSize) {
      throw InvalidDesign("design must be a 5x5 array");
    }
    for (int c = 0; c < kGridSize; ++c) {
      if (!row[c].is_number_integer()) throw InvalidDesign("design cells must be integers");
      codes[r * kGridSize + c] = row[c].get<int>();
    }
  }
  return MaterialMatrix::from_codes(codes);
}

OrderedJson controller_to_json(const ControllerParams& p) {
  OrderedJson j;
  j["frequency"] = p.frequency;
  j["amplitude"] = p.amplitude;
  j["center"] = p.center;
  j["phases"] = p.phases;
  return j;
}

ControllerParams controller_from_json(const Json& j) {
  ControllerParams p;
  p.frequency = j.at("frequency").get<double>();
  p.amplitude = j.at("amplitude").get<double>();
  p.center = j.at("center").get<double>();
  p.phases = j.at("phases").get<std::vector<double>>();
  return p;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  out.close();
  if (!out) throw IoError("write to " + path.string() + " failed");
}

std::vector<Json> read_jsonl(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  std::vector<Json> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(Json::parse(line));
    } catch (const Json::exception& e) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace voxbench
