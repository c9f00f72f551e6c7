#include "voxbench/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

#include "voxbench/io.hpp"
#include "voxbench/parallel.hpp"

namespace voxbench {

void EvoConfig::check() const {
  if (!(survivor_fraction > 0.0 && survivor_fraction < 1.0)) {
    throw ConfigError("survivor_fraction must lie strictly between 0 and 1");
  }
  if (population_size < 2) throw ConfigError("population_size must be at least 2");
  if (eval_budget < population_size) {
    throw BadBudget("eval_budget (" + std::to_string(eval_budget) +
                    ") must be at least population_size (" + std::to_string(population_size) + ")");
  }
  if (!(mutation_rate >= 0.0 && mutation_rate <= 1.0)) {
    throw ConfigError("mutation_rate must lie in [0, 1]");
  }
  if (controller_budget < 1) throw BadBudget("controller_budget must be at least 1");
}

int EvoConfig::survivor_count() const {
  return static_cast<int>(std::ceil(survivor_fraction * population_size));
}

const EvalRecord& Archive::best() const {
  if (records.empty()) throw EmptySet("archive has no records");
  const EvalRecord* best = &records.front();
  for (const EvalRecord& r : records) {
    if (r.reward > best->reward) best = &r;
  }
  return *best;
}

std::vector<EvalRecord> select_survivors(std::span<const EvalRecord> population, double fraction) {
  if (population.empty()) throw EmptySet("select_survivors: empty population");
  std::vector<EvalRecord> sorted(population.begin(), population.end());
  std::sort(sorted.begin(), sorted.end(), [](const EvalRecord& a, const EvalRecord& b) {
    if (a.reward != b.reward) return a.reward > b.reward;
    return a.id < b.id;
  });
  const auto keep = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(sorted.size())));
  sorted.erase(sorted.begin() + static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(keep, 1, sorted.size())),
               sorted.end());
  return sorted;
}

std::vector<RobotDesign> spawn_offspring(std::span<const EvalRecord> survivors, int count,
                                         std::unordered_set<std::uint64_t>& novelty,
                                         double mutation_rate, Rng& rng) {
  if (survivors.empty()) throw EmptySet("spawn_offspring: no survivors");
  std::vector<RobotDesign> out;
  out.reserve(count);
  int rejections = 0;
  while (static_cast<int>(out.size()) < count) {
    const EvalRecord& parent = survivors[rng.below(survivors.size())];
    RobotDesign child = mutate(parent.design, mutation_rate, rng);
    if (novelty.insert(design_hash(child)).second) {
      out.push_back(std::move(child));
      rejections = 0;
    } else if (++rejections >= kNoveltyRetryCap) {
      throw NoveltyExhausted("no novel offspring after " + std::to_string(kNoveltyRetryCap) +
                             " consecutive draws");
    }
  }
  return out;
}

namespace {

void score(const EnvInstance& env, const EvoConfig& config, const EvolveOptions& options,
           int generation, std::vector<RobotDesign>& designs, Archive& archive) {
  std::vector<std::optional<OptResult>> results(designs.size());
  parallel_for(designs.size(), options.threads, [&](std::size_t i) {
    Rng rng(fitness_seed(config.seed, env.spec().id, designs[i].matrix()));
    results[i] = optimize_controller(designs[i], env, config.controller_budget, rng,
                                     options.fitness);
  });
  for (std::size_t i = 0; i < designs.size(); ++i) {
    archive.records.push_back({static_cast<int>(archive.records.size()), generation,
                               std::move(designs[i]), results[i]->best_reward,
                               std::move(results[i]->best_params)});
  }
}

}  // namespace

Archive evolve(const EnvInstance& env, const EvoConfig& config, const EvolveOptions& options) {
  config.check();
  Archive archive;
  archive.env = env.spec().id;
  archive.config = config;
  Rng rng(derive_seed(config.seed, "evolve"));

  std::vector<RobotDesign> initial;
  int rejections = 0;
  while (static_cast<int>(initial.size()) < config.population_size) {
    RobotDesign d = random_design(rng);
    if (archive.novelty.insert(design_hash(d)).second) {
      initial.push_back(std::move(d));
      rejections = 0;
    } else if (++rejections >= kNoveltyRetryCap) {
      throw NoveltyExhausted("could not draw a novel initial population");
    }
  }
  score(env, config, options, 0, initial, archive);
  if (options.on_generation) options.on_generation(0, archive);

  std::vector<EvalRecord> population = archive.records;
  for (int generation = 1; static_cast<int>(archive.records.size()) < config.eval_budget;
       ++generation) {
    std::vector<EvalRecord> survivors = select_survivors(population, config.survivor_fraction);
    const int room = config.eval_budget - static_cast<int>(archive.records.size());
    const int count =
        std::min(config.population_size - static_cast<int>(survivors.size()), room);
    std::vector<RobotDesign> offspring =
        spawn_offspring(survivors, count, archive.novelty, config.mutation_rate, rng);
    const std::size_t first = archive.records.size();
    score(env, config, options, generation, offspring, archive);
    population = std::move(survivors);
    population.insert(population.end(), archive.records.begin() + first, archive.records.end());
    if (options.on_generation) options.on_generation(generation, archive);
  }
  return archive;
}

namespace {

OrderedJson config_to_json(const EvoConfig& c) {
  OrderedJson j;
  j["population_size"] = c.population_size;
  j["survivor_fraction"] = c.survivor_fraction;
  j["mutation_rate"] = c.mutation_rate;
  j["eval_budget"] = c.eval_budget;
  j["controller_budget"] = c.controller_budget;
  return j;
}

}  // namespace

std::string archive_to_jsonl(const Archive& archive) {
  std::string out;
  OrderedJson header;
  header["kind"] = "archive";
  header["env"] = archive.env;
  header["config"] = config_to_json(archive.config);
  header["seed"] = archive.config.seed;
  out += header.dump() + "\n";
  for (const EvalRecord& r : archive.records) {
    OrderedJson j;
    j["id"] = r.id;
    j["generation"] = r.generation;
    j["reward"] = r.reward;
    j["design"] = matrix_to_json(r.design.matrix());
    j["controller"] = controller_to_json(r.controller);
    out += j.dump() + "\n";
  }
  return out;
}

Archive archive_from_jsonl(std::string_view text) {
  Archive archive;
  std::istringstream in{std::string(text)};
  std::string line;
  bool have_header = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json j;
    try {
      j = Json::parse(line);
      if (!have_header) {
        if (j.value("kind", "") != "archive") throw IoError("first line is not an archive header");
        archive.env = j.at("env").get<std::string>();
        const Json& c = j.at("config");
        archive.config.population_size = c.at("population_size").get<int>();
        archive.config.survivor_fraction = c.at("survivor_fraction").get<double>();
        archive.config.mutation_rate = c.at("mutation_rate").get<double>();
        archive.config.eval_budget = c.at("eval_budget").get<int>();
        archive.config.controller_budget = c.at("controller_budget").get<int>();
        archive.config.seed = j.at("seed").get<std::uint64_t>();
        have_header = true;
        continue;
      }
      RobotDesign design(matrix_from_json(j.at("design")));
      archive.novelty.insert(design_hash(design));
      archive.records.push_back({j.at("id").get<int>(), j.at("generation").get<int>(),
                                 std::move(design), j.at("reward").get<double>(),
                                 controller_from_json(j.at("controller"))});
    } catch (const Json::exception& e) {
      throw IoError("archive line " + std::to_string(lineno) + ": " + e.what());
    } catch (const InvalidDesign& e) {
      throw IoError("archive line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!have_header) throw IoError("archive is empty");
  return archive;
}

void write_archive(const Archive& archive, const std::filesystem::path& path) {
  write_text_file(path, archive_to_jsonl(archive));
}

Archive read_archive(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return archive_from_jsonl(text);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace voxbench
