#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "voxbench/controller.hpp"
#include "voxbench/design.hpp"
#include "voxbench/envs.hpp"
#include "voxbench/episode.hpp"

namespace voxbench {

struct EvoConfig {
  int population_size = 30;
  double survivor_fraction = 0.5;
  double mutation_rate = kDefaultMutationRate;
  int eval_budget = 3000;
  int controller_budget = kDefaultControllerBudget;
  std::uint64_t seed = 0;

  void check() const;
  /// ceil(survivor_fraction * population_size)
  int survivor_count() const;
};

struct EvalRecord {
  int id = 0;
  int generation = 0;
  RobotDesign design;
  double reward = 0.0;
  ControllerParams controller;
};

/// Every design evaluated during one run, in evaluation order.
struct Archive {
  std::string env;
  EvoConfig config;
  std::vector<EvalRecord> records;
  std::unordered_set<std::uint64_t> novelty;

  const EvalRecord& best() const;  // first record with the top reward
};

struct EvolveOptions {
  FitnessSetup fitness;
  int threads = 1;
  /// Called after each generation has been appended.
  std::function<void(int generation, const Archive&)> on_generation;
};

inline constexpr int kNoveltyRetryCap = 10'000;

/// Generation 0 is population_size novel random designs; later generations
/// keep the survivors and refill with novel mutants until eval_budget
/// records exist. The design stream is derived from config.seed; each
/// design's controller search is seeded by fitness_seed(config.seed, ...).
Archive evolve(const EnvInstance& env, const EvoConfig& config, const EvolveOptions& options = {});

/// Top ceil(fraction * n) records by reward, ties to the lower id.
std::vector<EvalRecord> select_survivors(std::span<const EvalRecord> population, double fraction);

/// `count` mutants of uniformly chosen survivors whose hashes are not yet
/// in `novelty`; accepted hashes are inserted. Throws NoveltyExhausted
/// after kNoveltyRetryCap rejections in a row.
std::vector<RobotDesign> spawn_offspring(std::span<const EvalRecord> survivors, int count,
                                         std::unordered_set<std::uint64_t>& novelty,
                                         double mutation_rate, Rng& rng);

/// Header line then one record per line.
std::string archive_to_jsonl(const Archive& archive);
Archive archive_from_jsonl(std::string_view text);
void write_archive(const Archive& archive, const std::filesystem::path& path);
Archive read_archive(const std::filesystem::path& path);

}  // namespace voxbench
