#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "voxbench/controller.hpp"
#include "voxbench/design.hpp"

namespace voxbench {

using Json = nlohmann::json;
// Keys in insertion order so written files read naturally and stay stable.
using OrderedJson = nlohmann::ordered_json;

/// 5x5 nested integer array, row 0 first.
OrderedJson matrix_to_json(const MaterialMatrix& m);
MaterialMatrix matrix_from_json(const Json& j);  // throws InvalidDesign on shape/code errors

OrderedJson controller_to_json(const ControllerParams& p);
ControllerParams controller_from_json(const Json& j);

std::string read_text_file(const std::filesystem::path& path);
/// Writes atomically enough for our purposes: truncate, write, check.
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// Non-empty lines of a JSON-lines file, each parsed. Errors name path and line.
std::vector<Json> read_jsonl(const std::filesystem::path& path);

}  // namespace voxbench
