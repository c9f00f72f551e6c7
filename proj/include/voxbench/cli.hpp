#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "voxbench/episode.hpp"
#include "voxbench/evolution.hpp"
#include "voxbench/io.hpp"
#include "voxbench/qa.hpp"

namespace voxbench {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,
  kExitPartial = 3,
  kExitInternal = 4,
};

/// Everything the subcommands read. Defaults here are the documented
/// defaults; a JSON config file overrides them and flags override the file.
struct RunConfig {
  std::vector<std::string> envs{"Walker-v0"};
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "voxbench-out";
  int threads = 0;  // 0 = one per hardware thread

  EvoConfig evolution;  // its seed is ignored in favour of `seed`
  MaterialParams material;
  SimConfig sim;
  int horizon = 500;

  int questions = 200;
  DifficultyPolicy difficulty;

  std::string answerer = "heuristic";
  PromptVariant variant = PromptVariant::Full;
  int trials = 3;
  int in_flight = 1;

  std::string endpoint;
  int designgen_count = 10;
  std::vector<std::string> designgen_envs{"Walker-v0", "Pusher-v0", "Carrier-v0"};
  int max_actuators = kMaxGeneratedActuators;

  std::string render_design;                // matrix text
  std::filesystem::path render_archive;     // or the best record of an archive
  int render_steps = 100;

  int worker_threads() const;
  FitnessSetup fitness_setup() const;
  EnvOverrides env_overrides() const;
  void check() const;
};

/// Merges `j` into `config`; unknown keys are rejected with ConfigError.
void apply_config_json(RunConfig& config, const Json& j);
RunConfig load_config(const std::filesystem::path& path);
/// The full configuration as JSON, in the layout the file loader accepts.
OrderedJson config_to_json(const RunConfig& config);

std::filesystem::path archive_path(const RunConfig& c, const std::string& env);
std::filesystem::path dataset_dir(const RunConfig& c, const std::string& env);
std::filesystem::path eval_dir(const RunConfig& c);

int cmd_evolve(const RunConfig& config, std::ostream& out);
int cmd_genqa(const RunConfig& config, std::ostream& out);
int cmd_eval(const RunConfig& config, std::ostream& out);
int cmd_designgen(const RunConfig& config, std::ostream& out);
int cmd_render(const RunConfig& config, std::ostream& out);

/// Parses argv, dispatches, and maps errors onto exit codes.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace voxbench
