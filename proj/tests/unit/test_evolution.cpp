#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "test_util.hpp"
#include "voxbench/evolution.hpp"

using namespace voxbench;

namespace {

EvoConfig small_config(std::uint64_t seed = 1) {
  EvoConfig c;
  c.population_size = 8;
  c.eval_budget = 27;
  c.controller_budget = 3;
  c.seed = seed;
  return c;
}

EnvInstance short_walker() { return make_env("Walker-v0", {.horizon = 40}); }

EvalRecord record(int id, double reward) {
  Rng rng(static_cast<std::uint64_t>(id) + 100);
  return {id, 0, random_design(rng), reward, ControllerParams{}};
}

}  // namespace

TEST_CASE("config validation") {
  EvoConfig c;
  CHECK_NOTHROW(c.check());
  CHECK(c.survivor_count() == 15);
  c.population_size = 7;
  CHECK(c.survivor_count() == 4);
  c.eval_budget = 6;
  CHECK_THROWS_AS(c.check(), BadBudget);
  c = EvoConfig{};
  c.survivor_fraction = 1.0;
  CHECK_THROWS_AS(c.check(), ConfigError);
  c = EvoConfig{};
  c.population_size = 1;
  CHECK_THROWS_AS(c.check(), ConfigError);
  c = EvoConfig{};
  c.mutation_rate = 1.5;
  CHECK_THROWS_AS(c.check(), ConfigError);
  c = EvoConfig{};
  c.controller_budget = 0;
  CHECK_THROWS_AS(c.check(), BadBudget);
}

TEST_CASE("select_survivors") {
  std::vector<EvalRecord> pop;
  const double rewards[] = {0.5, 2.0, -1.0, 2.0, 0.7, 0.1, 3.0};
  for (int i = 0; i < 7; ++i) pop.push_back(record(i, rewards[i]));
  const auto top = select_survivors(pop, 0.5);
  REQUIRE(top.size() == 4);
  CHECK(top[0].id == 6);
  CHECK(top[1].id == 1);  // tie at 2.0 goes to the lower id
  CHECK(top[2].id == 3);
  CHECK(top[3].id == 4);
  CHECK(select_survivors(pop, 0.01).size() == 1);
  CHECK_THROWS_AS(select_survivors(std::span<const EvalRecord>{}, 0.5), EmptySet);
}

TEST_CASE("spawn_offspring produces novel designs only") {
  std::vector<EvalRecord> parents;
  std::unordered_set<std::uint64_t> novelty;
  for (int i = 0; i < 3; ++i) {
    parents.push_back(record(i, 0.0));
    novelty.insert(design_hash(parents.back().design.matrix()));
  }
  Rng rng(4);
  const auto kids = spawn_offspring(parents, 40, novelty, 0.1, rng);
  CHECK(kids.size() == 40);
  CHECK(novelty.size() == 43);
  std::set<std::uint64_t> seen;
  for (const RobotDesign& k : kids) {
    CHECK(validate(k.matrix()).valid);
    seen.insert(design_hash(k.matrix()));
  }
  CHECK(seen.size() == 40);

  // Rate 0 only ever reproduces the parents, which are already known.
  CHECK_THROWS_AS(spawn_offspring(parents, 1, novelty, 0.0, rng), NoveltyExhausted);
}

TEST_CASE("evolve respects the budget and generation layout") {
  const EvoConfig cfg = small_config();
  std::vector<int> seen_generations;
  EvolveOptions opts;
  opts.on_generation = [&](int g, const Archive&) { seen_generations.push_back(g); };
  const Archive a = evolve(short_walker(), cfg, opts);

  REQUIRE(a.records.size() == 27);
  CHECK(a.env == "Walker-v0");
  std::set<std::uint64_t> hashes;
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    const EvalRecord& r = a.records[i];
    CHECK(r.id == static_cast<int>(i));
    CHECK(validate(r.design.matrix()).valid);
    hashes.insert(design_hash(r.design.matrix()));
  }
  CHECK(hashes.size() == 27);
  CHECK(a.novelty.size() == 27);
  // 8 initial, then 4 new per generation (survivors are carried, not re-scored), last one short.
  const auto in_gen = [&](int g) {
    return std::count_if(a.records.begin(), a.records.end(),
                         [&](const EvalRecord& r) { return r.generation == g; });
  };
  CHECK(in_gen(0) == 8);
  for (int g = 1; g <= 4; ++g) CHECK(in_gen(g) == 4);
  CHECK(in_gen(5) == 3);
  CHECK(seen_generations == std::vector<int>{0, 1, 2, 3, 4, 5});
  CHECK(a.best().reward ==
        std::max_element(a.records.begin(), a.records.end(), [](const auto& x, const auto& y) {
          return x.reward < y.reward;
        })->reward);
}

TEST_CASE("evolve is reproducible and thread-count independent") {
  const Archive one = evolve(short_walker(), small_config(5));
  EvolveOptions threaded;
  threaded.threads = 4;
  const Archive four = evolve(short_walker(), small_config(5), threaded);
  CHECK(archive_to_jsonl(one) == archive_to_jsonl(four));
  const Archive other = evolve(short_walker(), small_config(6));
  CHECK(archive_to_jsonl(one) != archive_to_jsonl(other));
}

TEST_CASE("archived rewards are reproducible from the seed alone") {
  const EvoConfig cfg = small_config(9);
  const EnvInstance env = short_walker();
  const Archive a = evolve(env, cfg);
  for (const EvalRecord& r : {a.records.front(), a.records.back(), a.best()}) {
    Rng rng(fitness_seed(cfg.seed, env.spec().id, r.design.matrix()));
    CHECK(fitness(r.design, env, cfg.controller_budget, rng) == r.reward);
    CHECK(run_episode(r.design, env, r.controller).total_reward == r.reward);
  }
}

TEST_CASE("archive serialisation") {
  const Archive a = evolve(short_walker(), small_config(2));
  const std::string text = archive_to_jsonl(a);
  const Archive b = archive_from_jsonl(text);
  CHECK(archive_to_jsonl(b) == text);
  CHECK(b.config.seed == 2);
  CHECK(b.config.population_size == 8);
  CHECK(b.novelty == a.novelty);

  const auto dir = testutil::scratch_dir("archive");
  const auto path = dir / "nested" / "walker.jsonl";
  write_archive(a, path);
  CHECK(archive_to_jsonl(read_archive(path)) == text);

  CHECK_THROWS_AS(read_archive(dir / "missing.jsonl"), IoError);
  CHECK_THROWS_AS(archive_from_jsonl("{\"kind\":\"dataset\"}\n"), IoError);
  std::string broken = text;
  broken.insert(broken.find('\n') + 1, "{not json}\n");
  CHECK_THROWS_AS(archive_from_jsonl(broken), IoError);
  std::string bad_design = text.substr(0, text.find('\n') + 1) +
                           R"({"id":0,"generation":0,"reward":1,"design":[[0,0,0,0,0],[0,0,0,0,0],[0,0,0,0,0],[0,0,0,0,0],[0,0,0,0,0]],"controller":{"frequency":1,"amplitude":0.4,"center":1.1,"phases":[]}})"
                           "\n";
  CHECK_THROWS_AS(archive_from_jsonl(bad_design), IoError);
  std::filesystem::remove_all(dir);
}
