#include "voxbench/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <thread>

#include "voxbench/io.hpp"
#include "voxbench/parallel.hpp"

namespace voxbench {

double accuracy(std::span<const Answer> predictions, std::span<const Answer> truths) {
  if (predictions.size() != truths.size()) {
    throw LengthMismatch("accuracy: " + std::to_string(predictions.size()) + " predictions for " +
                         std::to_string(truths.size()) + " truths");
  }
  if (predictions.empty()) throw EmptySet("accuracy of an empty set");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i] != Answer::Invalid && predictions[i] == truths[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

double consistency(std::span<const std::vector<Answer>> trials, int expected_trials) {
  if (trials.empty()) throw EmptySet("consistency of an empty set");
  if (expected_trials < 2) throw ConfigError("consistency needs at least two trials");
  double sum = 0.0;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const auto& row = trials[i];
    if (static_cast<int>(row.size()) != expected_trials) {
      throw MissingTrial("question " + std::to_string(i) + " has " + std::to_string(row.size()) +
                         " trials, expected " + std::to_string(expected_trials));
    }
    int agree = 0;
    for (std::size_t k = 1; k < row.size(); ++k) {
      // Invalid never agrees, not even with another Invalid.
      if (row[0] != Answer::Invalid && row[k] == row[0]) ++agree;
    }
    sum += static_cast<double>(agree) / static_cast<double>(row.size() - 1);
  }
  return sum / static_cast<double>(trials.size());
}

Answer heuristic_answer(const Question& q) {
  const int act_a = actuator_count(q.design_a);
  const int act_b = actuator_count(q.design_b);
  if (act_a != act_b) return act_a > act_b ? Answer::A : Answer::B;
  const int vox_a = voxel_count(q.design_a);
  const int vox_b = voxel_count(q.design_b);
  if (vox_a != vox_b) return vox_a > vox_b ? Answer::A : Answer::B;
  return Answer::A;
}

namespace {

Reply letter(Answer a) { return {a, to_string(a), false}; }

class Oracle : public Answerer {
 public:
  explicit Oracle(bool anti) : anti_(anti) {}
  std::string name() const override { return anti_ ? "anti-oracle" : "oracle"; }
  bool needs_truth() const override { return true; }
  Reply select(const Question& q, const std::string&, int) override {
    return letter(anti_ ? flipped(q.ground_truth) : q.ground_truth);
  }

 private:
  bool anti_;
};

class RandomAnswerer : public Answerer {
 public:
  explicit RandomAnswerer(std::uint64_t seed) : seed_(seed) {}
  std::string name() const override { return "random(" + std::to_string(seed_) + ")"; }
  Reply select(const Question& q, const std::string&, int trial) override {
    Rng rng(derive_seed(derive_seed(seed_, static_cast<std::uint64_t>(trial)), q.id));
    return letter(rng.bernoulli(0.5) ? Answer::A : Answer::B);
  }

 private:
  std::uint64_t seed_;
};

class ConstantAnswerer : public Answerer {
 public:
  explicit ConstantAnswerer(Answer a) : a_(a) {}
  std::string name() const override { return std::string("constant-") + to_string(a_); }
  Reply select(const Question&, const std::string&, int) override { return letter(a_); }

 private:
  Answer a_;
};

class HeuristicAnswerer : public Answerer {
 public:
  std::string name() const override { return "heuristic"; }
  Reply select(const Question& q, const std::string&, int) override {
    return letter(heuristic_answer(q));
  }
};

}  // namespace

std::unique_ptr<Answerer> make_oracle() { return std::make_unique<Oracle>(false); }
std::unique_ptr<Answerer> make_anti_oracle() { return std::make_unique<Oracle>(true); }
std::unique_ptr<Answerer> make_random(std::uint64_t seed) {
  return std::make_unique<RandomAnswerer>(seed);
}
std::unique_ptr<Answerer> make_constant(Answer letter) {
  if (letter == Answer::Invalid) throw ConfigError("constant answerer needs A or B");
  return std::make_unique<ConstantAnswerer>(letter);
}
std::unique_ptr<Answerer> make_heuristic() { return std::make_unique<HeuristicAnswerer>(); }

std::unique_ptr<Answerer> make_answerer(std::string_view spec, std::uint64_t seed) {
  if (spec == "oracle") return make_oracle();
  if (spec == "anti-oracle") return make_anti_oracle();
  if (spec == "random") return make_random(seed);
  if (spec == "heuristic") return make_heuristic();
  if (spec == "constant-A") return make_constant(Answer::A);
  if (spec == "constant-B") return make_constant(Answer::B);
  if (spec.starts_with("http://") || spec.starts_with("stdio:")) {
    return std::make_unique<ExternalModel>(make_transport(spec));
  }
  throw ConfigError("unknown answerer '" + std::string(spec) +
                    "' (oracle, anti-oracle, random, heuristic, constant-A, constant-B, "
                    "http://host:port, stdio:command)");
}

std::string wire_request(const std::string& id, int trial, std::string_view mode,
                         const std::string& prompt) {
  OrderedJson j;
  j["id"] = id;
  j["trial"] = trial;
  j["mode"] = mode;
  j["prompt"] = prompt;
  return j.dump();
}

ExternalModel::ExternalModel(std::unique_ptr<Transport> transport, RetryPolicy retry)
    : transport_(std::move(transport)), retry_(retry) {
  if (retry_.attempts < 1) throw ConfigError("retry attempts must be at least 1");
}

std::optional<std::string> ExternalModel::call(std::string_view route, const std::string& body) {
  auto delay = retry_.initial_delay;
  for (int attempt = 1; attempt <= retry_.attempts; ++attempt) {
    try {
      return transport_->exchange(route, body);
    } catch (const EndpointError& e) {
      std::fprintf(stderr, "endpoint attempt %d/%d failed: %s\n", attempt, retry_.attempts,
                   e.what());
      if (attempt == retry_.attempts) break;
      std::this_thread::sleep_for(delay);
      delay = std::chrono::milliseconds(
          static_cast<long long>(static_cast<double>(delay.count()) * retry_.multiplier));
    }
  }
  ++faults_;
  return std::nullopt;
}

Reply ExternalModel::select(const Question& q, const std::string& prompt, int trial) {
  Reply r;
  const auto raw = call("/answer", wire_request(q.id, trial, "select", prompt));
  if (!raw) {
    r.fault = true;
    return r;
  }
  r.raw = *raw;
  const Json j = Json::parse(*raw, nullptr, false);
  if (j.is_object() && j.contains("answer") && j["answer"].is_string() && j.contains("id") &&
      j["id"] == q.id) {
    r.answer = answer_from_string(j["answer"].get<std::string>());
  }
  return r;
}

ExternalModel::Generated ExternalModel::generate(const std::string& id, const std::string& prompt,
                                                 int trial) {
  Generated g;
  const auto raw = call("/design", wire_request(id, trial, "generate", prompt));
  if (!raw) {
    g.fault = true;
    g.error = "endpoint unreachable";
    return g;
  }
  g.raw = *raw;
  const Json j = Json::parse(*raw, nullptr, false);
  if (!j.is_object() || !j.contains("design")) {
    g.error = "reply is not a design object";
    return g;
  }
  try {
    const Json& d = j["design"];
    // Be lenient with models that send the grid as text.
    g.design = d.is_string() ? parse_matrix(d.get<std::string>()) : matrix_from_json(d);
  } catch (const ParseError& e) {
    g.error = std::string("unparseable design (") + to_string(e.kind()) + ")";
  } catch (const Error& e) {
    g.error = std::string("unparseable design: ") + e.what();
  }
  return g;
}

namespace {

struct Slot {
  std::size_t dataset;
  std::size_t question;
};

Score score(std::span<const std::vector<Answer>> answers, std::span<const Answer> truths,
            int trials) {
  Score s;
  s.questions = static_cast<int>(answers.size());
  if (answers.empty()) return s;
  std::vector<Answer> flat_pred;
  std::vector<Answer> flat_truth;
  for (std::size_t i = 0; i < answers.size(); ++i) {
    for (Answer a : answers[i]) {
      flat_pred.push_back(a);
      flat_truth.push_back(truths[i]);
    }
  }
  s.accuracy = accuracy(flat_pred, flat_truth);
  s.consistency = trials >= 2 ? std::optional(consistency(answers, trials)) : std::nullopt;
  return s;
}

std::optional<double> mean_of(const std::vector<std::optional<double>>& xs) {
  double sum = 0.0;
  int n = 0;
  for (const auto& x : xs) {
    if (x) {
      sum += *x;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

Score mean_score(std::span<const ScoreRow* const> rows, Score ScoreRow::*part) {
  Score s;
  std::vector<std::optional<double>> acc;
  std::vector<std::optional<double>> cons;
  for (const ScoreRow* r : rows) {
    acc.push_back((r->*part).accuracy);
    cons.push_back((r->*part).consistency);
    s.questions += (r->*part).questions;
  }
  s.accuracy = mean_of(acc);
  s.consistency = mean_of(cons);
  return s;
}

ScoreRow mean_row(std::string name, std::span<const ScoreRow* const> rows) {
  ScoreRow out;
  out.name = std::move(name);
  out.easy = mean_score(rows, &ScoreRow::easy);
  out.hard = mean_score(rows, &ScoreRow::hard);
  out.all = mean_score(rows, &ScoreRow::all);
  for (const ScoreRow* r : rows) out.invalid += r->invalid;
  return out;
}

}  // namespace

EvalRun run_eval(std::span<const Dataset> datasets, Answerer& answerer, PromptVariant variant,
                 const EvalOptions& options) {
  if (options.trials < 1) throw ConfigError("trials must be at least 1");
  std::vector<Slot> slots;
  for (std::size_t d = 0; d < datasets.size(); ++d) {
    for (std::size_t q = 0; q < datasets[d].questions.size(); ++q) slots.push_back({d, q});
  }
  if (slots.empty()) throw EmptySet("no questions to evaluate");

  const int trials = options.trials;
  std::vector<Reply> replies(slots.size() * trials);
  parallel_for(replies.size(), options.in_flight, [&](std::size_t job) {
    const Slot& s = slots[job / trials];
    const Question& q = datasets[s.dataset].questions[s.question];
    const int trial = static_cast<int>(job % trials) + 1;
    replies[job] = answerer.select(q, render_prompt(q, variant), trial);
  });

  EvalRun run;
  EvalReport& report = run.report;
  report.answerer = answerer.name();
  report.variant = variant;
  report.trials = trials;

  std::size_t job = 0;
  for (const Dataset& ds : datasets) {
    if (ds.questions.empty()) continue;
    std::vector<std::vector<Answer>> answers[2];  // Easy, Hard
    std::vector<Answer> truths[2];
    std::vector<std::vector<Answer>> all_answers;
    std::vector<Answer> all_truths;
    ScoreRow row;
    row.name = ds.questions.front().env;
    row.category = to_string(task_info(row.name).category);
    for (const Question& q : ds.questions) {
      const Answer truth = variant == PromptVariant::Worse ? flipped(q.ground_truth)
                                                           : q.ground_truth;
      std::vector<Answer> mine;
      for (int t = 1; t <= trials; ++t, ++job) {
        const Reply& r = replies[job];
        mine.push_back(r.answer);
        if (r.answer == Answer::Invalid) ++row.invalid;
        if (r.fault) ++report.faults;
        run.transcript.push_back({q.id, q.env, t, r.answer, truth, r.raw, r.fault});
      }
      const int part = q.difficulty == Difficulty::Easy ? 0 : 1;
      answers[part].push_back(mine);
      truths[part].push_back(truth);
      all_answers.push_back(std::move(mine));
      all_truths.push_back(truth);
    }
    row.easy = score(answers[0], truths[0], trials);
    row.hard = score(answers[1], truths[1], trials);
    row.all = score(all_answers, all_truths, trials);
    report.invalid += row.invalid;
    report.envs.push_back(std::move(row));
  }

  for (TaskCategory cat : {TaskCategory::Locomotion, TaskCategory::ObjectManipulation,
                           TaskCategory::ClimbingBalancing}) {
    std::vector<const ScoreRow*> members;
    for (const ScoreRow& r : report.envs) {
      if (r.category == to_string(cat)) members.push_back(&r);
    }
    if (!members.empty()) report.categories.push_back(mean_row(to_string(cat), members));
  }
  std::vector<const ScoreRow*> all;
  for (const ScoreRow& r : report.envs) all.push_back(&r);
  report.overall = mean_row("Overall", all);
  return run;
}

namespace {

std::string fixed(std::optional<double> x, int digits) {
  if (!x) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, *x);
  return buf;
}

std::string pct(std::optional<double> x) {
  if (!x) return "-";
  return fixed(*x * 100.0, 2);
}

void csv_row(std::string& out, std::string_view scope, const ScoreRow& r) {
  out += std::string(scope) + "," + r.name + "," + r.category + ",";
  out += std::to_string(r.easy.questions) + "," + std::to_string(r.hard.questions) + ",";
  out += fixed(r.easy.accuracy, 6) + "," + fixed(r.hard.accuracy, 6) + ",";
  out += fixed(r.easy.consistency, 6) + "," + fixed(r.hard.consistency, 6) + ",";
  out += fixed(r.all.accuracy, 6) + "," + fixed(r.all.consistency, 6) + ",";
  out += std::to_string(r.invalid) + "\n";
}

void md_row(std::string& out, std::string_view first, std::string_view second, const ScoreRow& r) {
  out += "| " + std::string(first) + " | " + std::string(second) + " | " + pct(r.easy.accuracy) +
         " | " + pct(r.hard.accuracy) + " | " + pct(r.easy.consistency) + " | " +
         pct(r.hard.consistency) + " | " + std::to_string(r.invalid) + " |\n";
}

}  // namespace

std::string report_csv(const EvalReport& report) {
  std::string out =
      "scope,name,category,easy_n,hard_n,easy_accuracy,hard_accuracy,easy_consistency,"
      "hard_consistency,accuracy,consistency,invalid\n";
  for (const ScoreRow& r : report.envs) csv_row(out, "env", r);
  for (const ScoreRow& r : report.categories) csv_row(out, "category", r);
  csv_row(out, "overall", report.overall);
  return out;
}

std::string report_markdown(const EvalReport& report) {
  std::string out = "# Design selection: " + report.answerer + " (" + to_string(report.variant) +
                    " prompt, " + std::to_string(report.trials) + " trials)\n\n";
  out += "| Category | Environment | Easy Acc (%) | Hard Acc (%) | Easy Cons (%) | Hard Cons (%) "
         "| Invalid |\n";
  out += "|---|---|---|---|---|---|---|\n";
  for (const ScoreRow& cat : report.categories) {
    for (const ScoreRow& r : report.envs) {
      if (r.category == cat.name) md_row(out, cat.name, r.name, r);
    }
    md_row(out, cat.name, "**Average**", cat);
  }
  md_row(out, "**Overall**", "", report.overall);
  out += "\nInvalid answers: " + std::to_string(report.invalid) +
         "; endpoint faults: " + std::to_string(report.faults) + "\n";
  return out;
}

std::string transcript_jsonl(std::span<const TranscriptEntry> transcript, PromptVariant variant) {
  std::string out;
  for (const TranscriptEntry& t : transcript) {
    OrderedJson j;
    j["id"] = t.id;
    j["env"] = t.env;
    j["trial"] = t.trial;
    j["variant"] = to_string(variant);
    j["answer"] = to_string(t.answer);
    j["truth"] = to_string(t.truth);
    j["correct"] = t.answer == t.truth;
    j["raw"] = t.raw;
    j["fault"] = t.fault;
    out += j.dump() + "\n";
  }
  return out;
}

GenReport eval_generation(std::span<const GenCandidate> designs, const EnvInstance& env,
                          int controller_budget, std::uint64_t seed, const FitnessSetup& setup,
                          int max_actuators, int threads) {
  if (controller_budget < 1) throw BadBudget("controller budget must be at least 1");
  GenReport report;
  report.env = env.spec().id;
  report.total = static_cast<int>(designs.size());
  for (const GenCandidate& c : designs) {
    GenRow row;
    row.matrix = c.matrix;
    if (!c.matrix) {
      row.reason = c.error.empty() ? "no design" : c.error;
    } else {
      const ValidityReport v = validate(*c.matrix);
      if (!v.nonempty) {
        row.reason = "empty design";
      } else if (!v.connected) {
        row.reason = "voxels not connected";
      } else if (!v.has_actuator) {
        row.reason = "no actuator";
      } else if (actuator_count(*c.matrix) > max_actuators) {
        row.reason = std::string(kActuatorBudgetReason);
      } else {
        row.valid = true;
      }
    }
    report.rows.push_back(std::move(row));
  }

  parallel_for(report.rows.size(), threads, [&](std::size_t i) {
    GenRow& row = report.rows[i];
    if (!row.valid) return;
    const RobotDesign design(*row.matrix);
    Rng rng(fitness_seed(seed, env.spec().id, *row.matrix));
    row.reward = optimize_controller(design, env, controller_budget, rng, setup).best_reward;
  });

  // Running mean: equal rewards average to exactly that reward.
  double mean = 0.0;
  for (const GenRow& row : report.rows) {
    if (!row.reward) continue;
    ++report.valid_count;
    mean += (*row.reward - mean) / report.valid_count;
    if (!report.best || *row.reward > *report.best) report.best = row.reward;
  }
  if (report.valid_count > 0) report.average = mean;
  return report;
}

std::string gen_report_csv(std::span<const GenReport> reports) {
  std::string out = "env,valid,total,average_reward,best_reward\n";
  for (const GenReport& r : reports) {
    out += r.env + "," + std::to_string(r.valid_count) + "," + std::to_string(r.total) + "," +
           fixed(r.average, 6) + "," + fixed(r.best, 6) + "\n";
  }
  return out;
}

std::string gen_report_markdown(std::span<const GenReport> reports) {
  std::string out = "# Direct design generation\n\n";
  out += "| Environment | Valid Design | Avg. Reward | Best Reward |\n|---|---|---|---|\n";
  std::vector<std::optional<double>> avgs;
  std::vector<std::optional<double>> bests;
  for (const GenReport& r : reports) {
    out += "| " + r.env + " | " + std::to_string(r.valid_count) + "/" + std::to_string(r.total) +
           " | " + (r.average ? fixed(r.average, 2) : "-") + " | " +
           (r.best ? fixed(r.best, 2) : "-") + " |\n";
    avgs.push_back(r.average);
    bests.push_back(r.best);
  }
  if (reports.size() > 1) {
    const auto a = mean_of(avgs);
    const auto b = mean_of(bests);
    out += "| **Overall** | | " + (a ? fixed(a, 2) : "-") + " | " + (b ? fixed(b, 2) : "-") +
           " |\n";
  }
  return out;
}

std::string gen_rows_jsonl(std::span<const GenReport> reports) {
  std::string out;
  for (const GenReport& r : reports) {
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
      const GenRow& row = r.rows[i];
      OrderedJson j;
      j["env"] = r.env;
      j["index"] = i;
      j["design"] = row.matrix ? matrix_to_json(*row.matrix) : OrderedJson(nullptr);
      j["valid"] = row.valid;
      j["reason"] = row.reason;
      j["reward"] = row.reward ? OrderedJson(*row.reward) : OrderedJson(nullptr);
      out += j.dump() + "\n";
    }
  }
  return out;
}

}  // namespace voxbench
