#include "voxbench/cli.hpp"

#include <cstdio>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "voxbench/eval.hpp"
#include "voxbench/parallel.hpp"
#include "voxbench/render.hpp"

namespace voxbench {

int RunConfig::worker_threads() const { return threads > 0 ? threads : default_threads(); }

FitnessSetup RunConfig::fitness_setup() const {
  FitnessSetup s;
  s.episode.material = material;
  s.episode.sim = sim;
  return s;
}

EnvOverrides RunConfig::env_overrides() const {
  EnvOverrides o;
  o.horizon = horizon;
  return o;
}

void RunConfig::check() const {
  if (envs.empty()) throw ConfigError("at least one env is required");
  for (const auto& e : envs) task_info(e);
  if (threads < 0) throw ConfigError("threads must be >= 0");
  if (horizon <= 0) throw ConfigError("horizon must be positive");
  if (questions < 1) throw ConfigError("questions must be at least 1");
  if (trials < 2) throw ConfigError("trials must be at least 2");
  if (in_flight < 1) throw ConfigError("in_flight must be at least 1");
  if (designgen_count < 1) throw ConfigError("designgen count must be at least 1");
  if (max_actuators < 1) throw ConfigError("max_actuators must be at least 1");
  if (render_steps < 1) throw ConfigError("render steps must be at least 1");
  material.check();
  sim.check();
}

namespace {

template <typename T>
void take(const Json& obj, std::string_view key, T& dst) {
  if (auto it = obj.find(key); it != obj.end()) {
    try {
      dst = it->get<T>();
    } catch (const Json::exception&) {
      throw ConfigError("config key '" + std::string(key) + "' has the wrong type");
    }
  }
}

void reject_unknown(const Json& obj, std::string_view section,
                    std::initializer_list<std::string_view> known) {
  if (!obj.is_object()) throw ConfigError("config section '" + std::string(section) + "' must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
      throw ConfigError("unknown config key '" + std::string(section) +
                        (section.empty() ? "" : ".") + it.key() + "'");
    }
  }
}

}  // namespace

void apply_config_json(RunConfig& c, const Json& j) {
  reject_unknown(j, "", {"envs", "seed", "output_dir", "threads", "evolution", "material", "sim",
                         "horizon", "qa", "eval", "designgen", "render"});
  take(j, "envs", c.envs);
  take(j, "seed", c.seed);
  if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
  take(j, "threads", c.threads);
  take(j, "horizon", c.horizon);
  if (auto it = j.find("evolution"); it != j.end()) {
    reject_unknown(*it, "evolution", {"population_size", "survivor_fraction", "mutation_rate",
                                      "eval_budget", "controller_budget"});
    take(*it, "population_size", c.evolution.population_size);
    take(*it, "survivor_fraction", c.evolution.survivor_fraction);
    take(*it, "mutation_rate", c.evolution.mutation_rate);
    take(*it, "eval_budget", c.evolution.eval_budget);
    take(*it, "controller_budget", c.evolution.controller_budget);
  }
  if (auto it = j.find("material"); it != j.end()) {
    reject_unknown(*it, "material", {"voxel_size", "voxel_mass", "stiffness_rigid",
                                     "stiffness_soft", "stiffness_actuator", "damping"});
    take(*it, "voxel_size", c.material.voxel_size);
    take(*it, "voxel_mass", c.material.voxel_mass);
    take(*it, "stiffness_rigid", c.material.stiffness_rigid);
    take(*it, "stiffness_soft", c.material.stiffness_soft);
    take(*it, "stiffness_actuator", c.material.stiffness_actuator);
    take(*it, "damping", c.material.damping);
  }
  if (auto it = j.find("sim"); it != j.end()) {
    reject_unknown(*it, "sim", {"gravity", "dt", "substeps", "contact_stiffness",
                                "contact_damping", "friction", "friction_velocity"});
    take(*it, "gravity", c.sim.gravity);
    take(*it, "dt", c.sim.dt);
    take(*it, "substeps", c.sim.substeps);
    take(*it, "contact_stiffness", c.sim.contact_stiffness);
    take(*it, "contact_damping", c.sim.contact_damping);
    take(*it, "friction", c.sim.friction);
    take(*it, "friction_velocity", c.sim.friction_velocity);
  }
  if (auto it = j.find("qa"); it != j.end()) {
    reject_unknown(*it, "qa", {"questions", "difficulty", "threshold"});
    take(*it, "questions", c.questions);
    std::string policy;
    take(*it, "difficulty", policy);
    if (!policy.empty()) {
      if (policy == "median") {
        c.difficulty.kind = DifficultyPolicy::Kind::Median;
      } else if (policy == "threshold") {
        c.difficulty.kind = DifficultyPolicy::Kind::Threshold;
      } else {
        throw ConfigError("qa.difficulty must be 'median' or 'threshold'");
      }
    }
    take(*it, "threshold", c.difficulty.threshold);
  }
  if (auto it = j.find("eval"); it != j.end()) {
    reject_unknown(*it, "eval", {"answerer", "variant", "trials", "in_flight"});
    take(*it, "answerer", c.answerer);
    if (it->contains("variant")) c.variant = variant_from_string(it->at("variant").get<std::string>());
    take(*it, "trials", c.trials);
    take(*it, "in_flight", c.in_flight);
  }
  if (auto it = j.find("designgen"); it != j.end()) {
    reject_unknown(*it, "designgen", {"endpoint", "count", "envs", "max_actuators"});
    take(*it, "endpoint", c.endpoint);
    take(*it, "count", c.designgen_count);
    take(*it, "envs", c.designgen_envs);
    take(*it, "max_actuators", c.max_actuators);
  }
  if (auto it = j.find("render"); it != j.end()) {
    reject_unknown(*it, "render", {"design", "archive", "steps"});
    take(*it, "design", c.render_design);
    if (it->contains("archive")) c.render_archive = it->at("archive").get<std::string>();
    take(*it, "steps", c.render_steps);
  }
}

RunConfig load_config(const std::filesystem::path& path) {
  RunConfig c;
  Json j;
  try {
    j = Json::parse(read_text_file(path));
  } catch (const Json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  apply_config_json(c, j);
  return c;
}

OrderedJson config_to_json(const RunConfig& c) {
  OrderedJson j;
  j["envs"] = c.envs;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir.string();
  j["threads"] = c.threads;
  j["horizon"] = c.horizon;
  j["evolution"] = {{"population_size", c.evolution.population_size},
                    {"survivor_fraction", c.evolution.survivor_fraction},
                    {"mutation_rate", c.evolution.mutation_rate},
                    {"eval_budget", c.evolution.eval_budget},
                    {"controller_budget", c.evolution.controller_budget}};
  j["material"] = {{"voxel_size", c.material.voxel_size},
                   {"voxel_mass", c.material.voxel_mass},
                   {"stiffness_rigid", c.material.stiffness_rigid},
                   {"stiffness_soft", c.material.stiffness_soft},
                   {"stiffness_actuator", c.material.stiffness_actuator},
                   {"damping", c.material.damping}};
  j["sim"] = {{"gravity", c.sim.gravity},
              {"dt", c.sim.dt},
              {"substeps", c.sim.substeps},
              {"contact_stiffness", c.sim.contact_stiffness},
              {"contact_damping", c.sim.contact_damping},
              {"friction", c.sim.friction},
              {"friction_velocity", c.sim.friction_velocity}};
  j["qa"] = {{"questions", c.questions},
             {"difficulty",
              c.difficulty.kind == DifficultyPolicy::Kind::Median ? "median" : "threshold"},
             {"threshold", c.difficulty.threshold}};
  j["eval"] = {{"answerer", c.answerer},
               {"variant", to_string(c.variant)},
               {"trials", c.trials},
               {"in_flight", c.in_flight}};
  j["designgen"] = {{"endpoint", c.endpoint},
                    {"count", c.designgen_count},
                    {"envs", c.designgen_envs},
                    {"max_actuators", c.max_actuators}};
  j["render"] = {{"design", c.render_design},
                 {"archive", c.render_archive.string()},
                 {"steps", c.render_steps}};
  return j;
}

std::filesystem::path archive_path(const RunConfig& c, const std::string& env) {
  return c.output_dir / "archives" / (env + ".jsonl");
}

std::filesystem::path dataset_dir(const RunConfig& c, const std::string& env) {
  return c.output_dir / "datasets" / env;
}

std::filesystem::path eval_dir(const RunConfig& c) {
  std::string name;
  for (char ch : c.answerer) name.push_back(std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' ? ch : '_');
  return c.output_dir / "eval" / (name + "-" + to_string(c.variant));
}

namespace {

std::string fmt(double v, int digits = 3) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

EvoConfig evo_config(const RunConfig& c) {
  EvoConfig e = c.evolution;
  e.seed = c.seed;
  return e;
}

}  // namespace

int cmd_evolve(const RunConfig& c, std::ostream& out) {
  c.check();
  std::vector<EnvInstance> envs;
  for (const auto& id : c.envs) envs.push_back(make_env(id, c.env_overrides(), c.material.voxel_size));
  const EvoConfig evo = evo_config(c);
  evo.check();
  for (const EnvInstance& env : envs) {
    EvolveOptions opts;
    opts.fitness = c.fitness_setup();
    opts.threads = c.worker_threads();
    const Archive archive = evolve(env, evo, opts);
    const auto path = archive_path(c, archive.env);
    write_archive(archive, path);
    const EvalRecord& best = archive.best();
    out << archive.env << ": " << archive.records.size() << " records, best reward "
        << fmt(best.reward) << " (record " << best.id << ") -> " << path.string() << "\n";
  }
  return kExitOk;
}

int cmd_genqa(const RunConfig& c, std::ostream& out) {
  c.check();
  bool failed = false;
  out << "| Environment | # Questions | Easy | Hard | Reward gap range | Reward range |\n"
      << "|---|---|---|---|---|---|\n";
  for (const auto& env : c.envs) {
    try {
      const Archive archive = read_archive(archive_path(c, env));
      Rng rng(derive_seed(derive_seed(c.seed, "genqa"), env));
      Dataset ds;
      ds.questions = build_pairs(archive, c.questions, rng);
      label_difficulty(ds.questions, c.difficulty);
      ds.manifest = make_manifest(archive, ds.questions, c.seed, c.difficulty);
      export_dataset(ds, dataset_dir(c, env));
      export_chat_finetune(ds.questions, c.output_dir / "chat" / (env + ".jsonl"));
      const DatasetManifest& m = ds.manifest;
      out << "| " << env << " | " << m.question_count << " | " << m.easy_count << " | "
          << m.hard_count << " | " << fmt(m.reward_gap_min) << " to " << fmt(m.reward_gap_max)
          << " | " << fmt(m.reward_min) << " to " << fmt(m.reward_max) << " |\n";
    } catch (const NotEnoughRecords& e) {
      failed = true;
      out << "| " << env << " | failed: " << e.what() << " | | | | |\n";
    }
  }
  return failed ? kExitUsage : kExitOk;
}

int cmd_eval(const RunConfig& c, std::ostream& out) {
  c.check();
  auto answerer = make_answerer(c.answerer, derive_seed(c.seed, "eval"));
  std::vector<Dataset> datasets;
  for (const auto& env : c.envs) {
    bool has_truth = false;
    datasets.push_back(import_dataset(dataset_dir(c, env), &has_truth));
    if (!has_truth) throw DatasetMismatch(dataset_dir(c, env).string() + ": truth.jsonl missing");
  }
  EvalOptions opts;
  opts.trials = c.trials;
  opts.in_flight = c.in_flight;
  const EvalRun run = run_eval(datasets, *answerer, c.variant, opts);
  const auto dir = eval_dir(c);
  write_text_file(dir / "report.csv", report_csv(run.report));
  write_text_file(dir / "report.md", report_markdown(run.report));
  write_text_file(dir / "transcript.jsonl", transcript_jsonl(run.transcript, c.variant));
  out << report_markdown(run.report) << "Reports written to " << dir.string() << "\n";
  return run.report.faults > 0 ? kExitPartial : kExitOk;
}

int cmd_designgen(const RunConfig& c, std::ostream& out) {
  c.check();
  if (c.endpoint.empty()) throw ConfigError("designgen needs --endpoint");
  ExternalModel model(make_transport(c.endpoint));
  std::vector<GenReport> reports;
  for (const auto& env_id : c.designgen_envs) {
    const EnvInstance env = make_env(env_id, c.env_overrides(), c.material.voxel_size);
    const std::string prompt = render_generation_prompt(env_id, c.max_actuators);
    std::vector<GenCandidate> candidates;
    for (int i = 0; i < c.designgen_count; ++i) {
      auto g = model.generate(env_id + "-gen-" + std::to_string(i), prompt, 1);
      candidates.push_back({g.design, g.error});
    }
    reports.push_back(eval_generation(candidates, env, c.evolution.controller_budget, c.seed,
                                      c.fitness_setup(), c.max_actuators, c.worker_threads()));
  }
  const auto dir = c.output_dir / "designgen";
  write_text_file(dir / "report.csv", gen_report_csv(reports));
  write_text_file(dir / "report.md", gen_report_markdown(reports));
  write_text_file(dir / "designs.jsonl", gen_rows_jsonl(reports));
  out << gen_report_markdown(reports) << "Reports written to " << dir.string() << "\n";
  return model.faults() > 0 ? kExitPartial : kExitOk;
}

int cmd_render(const RunConfig& c, std::ostream& out) {
  c.check();
  const std::string& env_id = c.envs.front();
  std::optional<RobotDesign> design;
  ControllerParams controller;
  if (!c.render_archive.empty()) {
    const Archive archive = read_archive(c.render_archive);
    const EvalRecord& best = archive.best();
    design = best.design;
    controller = best.controller;
  } else if (!c.render_design.empty()) {
    design = RobotDesign(parse_matrix(c.render_design));
    for (int i = 0; i < actuator_count(*design); ++i) {
      controller.phases.push_back(2.0 * std::numbers::pi * i / actuator_count(*design));
    }
  } else {
    throw ConfigError("render needs --design or --archive");
  }
  if (!validate(design->matrix()).valid) throw InvalidDesign("render needs a valid design");

  const EnvInstance env = make_env(env_id, c.env_overrides(), c.material.voxel_size);
  const SoftBody body = build_body(*design, c.material, {0.0, 0.0});
  const auto dir = c.output_dir / "render" / env_id;
  std::filesystem::create_directories(dir);
  std::string trajectory;
  EpisodeOptions opts = c.fitness_setup().episode;
  int frames = 0;
  opts.on_frame = [&](int tick, const SimState& s) {
    FrameView view;
    view.center_x = com(s, body).x;
    char name[32];
    std::snprintf(name, sizeof name, "frame_%04d.svg", tick);
    write_text_file(dir / name, render_frame_svg(*design, body, env.spec(), s, view));
    std::ostringstream line;
    line << std::setprecision(9) << s.time;
    for (const Vec2& p : s.positions) line << ' ' << p.x << ' ' << p.y;
    trajectory += line.str() + "\n";
    ++frames;
  };
  const EpisodeResult r = run_episode(*design, env, controller, c.render_steps, opts);

  OrderedJson stats;
  stats["env"] = env_id;
  stats["design"] = matrix_to_json(design->matrix());
  stats["controller"] = controller_to_json(controller);
  stats["frames"] = frames;
  stats["steps"] = r.steps;
  stats["total_reward"] = r.total_reward;
  stats["terminal_adjustment"] = r.terminal_adjustment;
  stats["reason"] = to_string(r.reason);
  stats["com_start"] = {r.com_start.x, r.com_start.y};
  stats["com_end"] = {r.com_end.x, r.com_end.y};
  stats["displacement"] = {r.displacement().x, r.displacement().y};
  write_text_file(dir / "stats.json", stats.dump(2) + "\n");
  write_text_file(dir / "trajectory.txt", trajectory);
  out << env_id << ": " << frames << " frames, reward " << fmt(r.total_reward)
      << ", displacement " << fmt(r.displacement().x) << " m -> " << dir.string() << "\n";
  return kExitOk;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Soft robot design evolution and design-selection benchmark"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Expand all help");

  std::string config_file;
  Json overrides = Json::object();
  auto set = [&overrides](std::initializer_list<std::string> path) {
    return [&overrides, keys = std::vector<std::string>(path)](const auto& value) {
      Json* node = &overrides;
      for (std::size_t i = 0; i + 1 < keys.size(); ++i) node = &(*node)[keys[i]];
      (*node)[keys.back()] = value;
    };
  };

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_file, "JSON run configuration file");
    sub->add_option_function<std::vector<std::string>>("--env", set({"envs"}),
                                                       "Environment id (repeatable)");
    sub->add_option_function<std::uint64_t>("--seed", set({"seed"}), "Global seed");
    sub->add_option_function<std::string>("--out", set({"output_dir"}), "Output directory");
    sub->add_option_function<int>("--threads", set({"threads"}), "Worker threads (0 = all cores)");
  };

  CLI::App* evolve_cmd = app.add_subcommand("evolve", "Evolve designs and write archives");
  common(evolve_cmd);
  evolve_cmd->add_option_function<int>("--budget", set({"evolution", "eval_budget"}),
                                       "Designs evaluated per env");
  evolve_cmd->add_option_function<int>("--population", set({"evolution", "population_size"}),
                                       "Population size");
  evolve_cmd->add_option_function<int>("--controller-budget",
                                       set({"evolution", "controller_budget"}),
                                       "Episodes per controller search");
  evolve_cmd->add_option_function<double>("--mutation-rate", set({"evolution", "mutation_rate"}),
                                          "Per-cell mutation probability");
  evolve_cmd->add_option_function<double>("--survivor-fraction",
                                          set({"evolution", "survivor_fraction"}),
                                          "Fraction kept per generation");
  evolve_cmd->add_option_function<int>("--horizon", set({"horizon"}), "Episode length in ticks");

  CLI::App* genqa_cmd = app.add_subcommand("genqa", "Build QA datasets from archives");
  common(genqa_cmd);
  genqa_cmd->add_option_function<int>("--questions", set({"qa", "questions"}),
                                      "Questions per env");
  genqa_cmd->add_option_function<std::string>("--difficulty", set({"qa", "difficulty"}),
                                              "median or threshold");
  genqa_cmd->add_option_function<double>("--threshold", set({"qa", "threshold"}),
                                         "Gap at or below which a question is Hard");

  CLI::App* eval_cmd = app.add_subcommand("eval", "Score an answerer on datasets");
  common(eval_cmd);
  eval_cmd->add_option_function<std::string>(
      "--answerer", set({"eval", "answerer"}),
      "heuristic, random, constant-A, constant-B, oracle, anti-oracle, http://host:port, "
      "stdio:command");
  eval_cmd->add_option_function<std::string>("--variant", set({"eval", "variant"}),
                                             "full, noact, noenv or worse");
  eval_cmd->add_option_function<int>("--trials", set({"eval", "trials"}), "Trials per question");
  eval_cmd->add_option_function<int>("--in-flight", set({"eval", "in_flight"}),
                                     "Concurrent requests");

  CLI::App* gen_cmd = app.add_subcommand("designgen", "Ask an endpoint for designs and score them");
  common(gen_cmd);
  gen_cmd->add_option_function<std::string>("--endpoint", set({"designgen", "endpoint"}),
                                             "http://host:port or stdio:command");
  gen_cmd->add_option_function<int>("--count", set({"designgen", "count"}),
                                    "Designs requested per env");
  gen_cmd->add_option_function<std::vector<std::string>>("--gen-env", set({"designgen", "envs"}),
                                                         "Environment to design for (repeatable)");
  gen_cmd->add_option_function<int>("--controller-budget", set({"evolution", "controller_budget"}),
                                    "Episodes per controller search");
  gen_cmd->add_option_function<int>("--max-actuators", set({"designgen", "max_actuators"}),
                                    "Actuator limit for a valid design");

  CLI::App* render_cmd = app.add_subcommand("render", "Simulate one design and write SVG frames");
  common(render_cmd);
  render_cmd->add_option_function<std::string>("--design", set({"render", "design"}),
                                               "Design matrix text");
  render_cmd->add_option_function<std::string>("--archive", set({"render", "archive"}),
                                               "Archive whose best record is rendered");
  render_cmd->add_option_function<int>("--steps", set({"render", "steps"}), "Ticks to simulate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Help requests land here with exit code 0 and print the right page.
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  try {
    RunConfig config = config_file.empty() ? RunConfig{} : load_config(config_file);
    apply_config_json(config, overrides);
    if (app.got_subcommand(evolve_cmd)) return cmd_evolve(config, out);
    if (app.got_subcommand(genqa_cmd)) return cmd_genqa(config, out);
    if (app.got_subcommand(eval_cmd)) return cmd_eval(config, out);
    if (app.got_subcommand(gen_cmd)) return cmd_designgen(config, out);
    return cmd_render(config, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InvalidDesign& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInternal;
  }
}

}  // namespace voxbench
