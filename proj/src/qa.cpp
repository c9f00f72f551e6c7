#include "voxbench/qa.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <utility>

#include "voxbench/envs.hpp"
#include "voxbench/io.hpp"

namespace voxbench {

const char* to_string(Answer a) {
  switch (a) {
    case Answer::A: return "A";
    case Answer::B: return "B";
    case Answer::Invalid: return "Invalid";
  }
  return "?";
}

Answer answer_from_string(std::string_view s) {
  if (s == "A") return Answer::A;
  if (s == "B") return Answer::B;
  return Answer::Invalid;
}

const char* to_string(Difficulty d) { return d == Difficulty::Easy ? "Easy" : "Hard"; }

Difficulty difficulty_from_string(std::string_view s) {
  if (s == "Easy") return Difficulty::Easy;
  if (s == "Hard") return Difficulty::Hard;
  throw ConfigError("unknown difficulty '" + std::string(s) + "'");
}

const char* to_string(PromptVariant v) {
  switch (v) {
    case PromptVariant::Full: return "Full";
    case PromptVariant::NoAct: return "NoAct";
    case PromptVariant::NoEnv: return "NoEnv";
    case PromptVariant::Worse: return "Worse";
  }
  return "?";
}

PromptVariant variant_from_string(std::string_view s) {
  std::string lower;
  for (char c : s) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lower == "full") return PromptVariant::Full;
  if (lower == "noact") return PromptVariant::NoAct;
  if (lower == "noenv") return PromptVariant::NoEnv;
  if (lower == "worse") return PromptVariant::Worse;
  throw ConfigError("unknown prompt variant '" + std::string(s) +
                    "' (expected full, noact, noenv or worse)");
}

std::vector<Question> build_pairs(const Archive& archive, int target_count, Rng& rng) {
  std::vector<const EvalRecord*> ranked;
  for (const EvalRecord& r : archive.records) ranked.push_back(&r);
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const EvalRecord* a, const EvalRecord* b) { return a->reward > b->reward; });
  const std::size_t n = ranked.size();
  if (n < 2 || ranked.front()->reward == ranked.back()->reward) {
    throw NotEnoughRecords("archive for " + archive.env +
                           " needs at least two records with different rewards");
  }

  std::vector<std::size_t> offsets;
  for (std::size_t k = 1; k < n; k *= 2) offsets.push_back(k);
  std::vector<std::vector<std::size_t>> anchors(offsets.size());
  for (std::size_t o = 0; o < offsets.size(); ++o) {
    auto& list = anchors[o];
    list.resize(n - offsets[o]);
    std::iota(list.begin(), list.end(), std::size_t{0});
    for (std::size_t i = list.size(); i > 1; --i) std::swap(list[i - 1], list[rng.below(i)]);
  }

  std::vector<Question> out;
  std::set<std::pair<std::uint64_t, std::uint64_t>> seen;
  std::vector<std::size_t> cursor(offsets.size(), 0);
  bool progress = true;
  while (static_cast<int>(out.size()) < target_count && progress) {
    progress = false;
    for (std::size_t o = 0; o < offsets.size() && static_cast<int>(out.size()) < target_count;
         ++o) {
      while (cursor[o] < anchors[o].size()) {
        const std::size_t i = anchors[o][cursor[o]++];
        const EvalRecord& hi = *ranked[i];
        const EvalRecord& lo = *ranked[i + offsets[o]];
        if (hi.reward == lo.reward) continue;
        const std::uint64_t ha = design_hash(hi.design);
        const std::uint64_t hb = design_hash(lo.design);
        const std::pair key{std::min(ha, hb), std::max(ha, hb)};
        if (key.first == key.second || !seen.insert(key).second) continue;

        Question q;
        q.id = archive.env + "-" + std::to_string(out.size());
        q.env = archive.env;
        const bool better_on_a = rng.bernoulli(0.5);
        const EvalRecord& a = better_on_a ? hi : lo;
        const EvalRecord& b = better_on_a ? lo : hi;
        q.design_a = a.design.matrix();
        q.design_b = b.design.matrix();
        q.reward_a = a.reward;
        q.reward_b = b.reward;
        q.ground_truth = q.reward_a > q.reward_b ? Answer::A : Answer::B;
        q.reward_gap = std::abs(q.reward_a - q.reward_b);
        out.push_back(std::move(q));
        progress = true;
        break;
      }
    }
  }
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) throw EmptySet("median of nothing");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

void label_difficulty(std::vector<Question>& questions, const DifficultyPolicy& policy) {
  std::map<std::string, double> cut;
  if (policy.kind == DifficultyPolicy::Kind::Median) {
    std::map<std::string, std::vector<double>> gaps;
    for (const Question& q : questions) gaps[q.env].push_back(q.reward_gap);
    for (auto& [env, g] : gaps) cut[env] = median(std::move(g));
  }
  for (Question& q : questions) {
    const double c =
        policy.kind == DifficultyPolicy::Kind::Median ? cut.at(q.env) : policy.threshold;
    q.difficulty = q.reward_gap <= c ? Difficulty::Hard : Difficulty::Easy;
  }
}

namespace {

constexpr std::string_view kIntro =
    "You are comparing soft robot designs in a physics simulation.\n";

constexpr std::string_view kLegend =
    "Each robot is a 5x5 grid of voxels given as five rows of material codes. The first row "
    "is the top of the robot and the last row rests on the ground.\n"
    "0 = empty\n"
    "1 = rigid\n"
    "2 = soft\n"
    "3 = horizontal actuator\n"
    "4 = vertical actuator\n"
    "Non-empty voxels that share an edge are joined together.\n";

constexpr std::string_view kActuation =
    "Actuation mechanism: actuator voxels expand and contract periodically, driven by a shared "
    "open-loop oscillating signal with a separate phase for each actuator. Horizontal "
    "actuators change length along the ground and vertical actuators change height. Rigid and "
    "soft voxels are passive; soft voxels deform easily and rigid voxels hold their shape.\n";

void append_env(std::string& out, std::string_view env_id) {
  const TaskInfo& info = task_info(env_id);
  out += "Environment: ";
  out += info.description;
  out += "\nTask objective: ";
  out += info.objective;
  out += "\n";
}

}  // namespace

std::string render_prompt(const Question& q, PromptVariant variant) {
  std::string out(kIntro);
  out += "\n";
  out += kLegend;
  if (variant != PromptVariant::NoAct) {
    out += "\n";
    out += kActuation;
  }
  if (variant != PromptVariant::NoEnv) {
    out += "\n";
    append_env(out, q.env);
  }
  out += "\nDesign A:\n" + render_matrix(q.design_a);
  out += "\nDesign B:\n" + render_matrix(q.design_b);
  out += "\n";
  out += variant == PromptVariant::Worse ? kWorseInstruction : kBetterInstruction;
  return out;
}

std::string render_generation_prompt(std::string_view env_id, int max_actuators) {
  std::string out(kIntro);
  out += "\n";
  out += kLegend;
  out += "\n";
  out += kActuation;
  out += "\n";
  append_env(out, env_id);
  out += "\nDesign one robot that achieves a high reward on this task. Use no more than " +
         std::to_string(max_actuators) +
         " actuator voxels (codes 3 and 4 together), keep all non-empty voxels connected, and "
         "reply with the grid as five lines of five digits.";
  return out;
}

DatasetManifest make_manifest(const Archive& archive, std::span<const Question> questions,
                              std::uint64_t seed, const DifficultyPolicy& policy) {
  DatasetManifest m;
  m.env = archive.env;
  m.seed = seed;
  m.difficulty_policy = policy.kind == DifficultyPolicy::Kind::Median
                            ? "median"
                            : "threshold";
  m.question_count = static_cast<int>(questions.size());
  for (const Question& q : questions) {
    (q.difficulty == Difficulty::Easy ? m.easy_count : m.hard_count)++;
  }
  if (!questions.empty()) {
    auto [lo, hi] = std::minmax_element(
        questions.begin(), questions.end(),
        [](const Question& a, const Question& b) { return a.reward_gap < b.reward_gap; });
    m.reward_gap_min = lo->reward_gap;
    m.reward_gap_max = hi->reward_gap;
  }
  if (!archive.records.empty()) {
    auto [lo, hi] = std::minmax_element(
        archive.records.begin(), archive.records.end(),
        [](const EvalRecord& a, const EvalRecord& b) { return a.reward < b.reward; });
    m.reward_min = lo->reward;
    m.reward_max = hi->reward;
  }
  return m;
}

std::string questions_jsonl(std::span<const Question> questions) {
  std::string out;
  for (const Question& q : questions) {
    OrderedJson j;
    j["id"] = q.id;
    j["env"] = q.env;
    j["prompt"] = render_prompt(q, PromptVariant::Full);
    j["design_a"] = matrix_to_json(q.design_a);
    j["design_b"] = matrix_to_json(q.design_b);
    out += j.dump() + "\n";
  }
  return out;
}

std::string truth_jsonl(std::span<const Question> questions) {
  std::string out;
  for (const Question& q : questions) {
    OrderedJson j;
    j["id"] = q.id;
    j["ground_truth"] = to_string(q.ground_truth);
    j["reward_a"] = q.reward_a;
    j["reward_b"] = q.reward_b;
    j["reward_gap"] = q.reward_gap;
    j["difficulty"] = to_string(q.difficulty);
    out += j.dump() + "\n";
  }
  return out;
}

std::string manifest_json(const DatasetManifest& m) {
  OrderedJson j;
  j["env"] = m.env;
  j["question_count"] = m.question_count;
  j["easy_count"] = m.easy_count;
  j["hard_count"] = m.hard_count;
  j["reward_gap_min"] = m.reward_gap_min;
  j["reward_gap_max"] = m.reward_gap_max;
  j["reward_min"] = m.reward_min;
  j["reward_max"] = m.reward_max;
  j["seed"] = m.seed;
  j["difficulty_policy"] = m.difficulty_policy;
  return j.dump(2) + "\n";
}

void export_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
  write_text_file(dir / kQuestionsFile, questions_jsonl(dataset.questions));
  write_text_file(dir / kTruthFile, truth_jsonl(dataset.questions));
  write_text_file(dir / kManifestFile, manifest_json(dataset.manifest));
}

Dataset import_dataset(const std::filesystem::path& dir, bool* has_truth) {
  Dataset ds;
  try {
    const Json m = Json::parse(read_text_file(dir / kManifestFile));
    ds.manifest.env = m.at("env").get<std::string>();
    ds.manifest.question_count = m.at("question_count").get<int>();
    ds.manifest.easy_count = m.at("easy_count").get<int>();
    ds.manifest.hard_count = m.at("hard_count").get<int>();
    ds.manifest.reward_gap_min = m.at("reward_gap_min").get<double>();
    ds.manifest.reward_gap_max = m.at("reward_gap_max").get<double>();
    ds.manifest.reward_min = m.at("reward_min").get<double>();
    ds.manifest.reward_max = m.at("reward_max").get<double>();
    ds.manifest.seed = m.at("seed").get<std::uint64_t>();
    ds.manifest.difficulty_policy = m.value("difficulty_policy", "median");

    for (const Json& j : read_jsonl(dir / kQuestionsFile)) {
      Question q;
      q.id = j.at("id").get<std::string>();
      q.env = j.at("env").get<std::string>();
      q.design_a = matrix_from_json(j.at("design_a"));
      q.design_b = matrix_from_json(j.at("design_b"));
      ds.questions.push_back(std::move(q));
    }
    const bool truth = std::filesystem::exists(dir / kTruthFile);
    if (has_truth) *has_truth = truth;
    if (truth) {
      const std::vector<Json> rows = read_jsonl(dir / kTruthFile);
      if (rows.size() != ds.questions.size()) {
        throw DatasetMismatch(dir.string() + ": truth has " + std::to_string(rows.size()) +
                              " rows for " + std::to_string(ds.questions.size()) + " questions");
      }
      for (std::size_t i = 0; i < rows.size(); ++i) {
        Question& q = ds.questions[i];
        const Json& t = rows[i];
        if (t.at("id").get<std::string>() != q.id) {
          throw DatasetMismatch(dir.string() + ": truth row " + std::to_string(i + 1) +
                                " is for '" + t.at("id").get<std::string>() + "', expected '" +
                                q.id + "'");
        }
        q.ground_truth = answer_from_string(t.at("ground_truth").get<std::string>());
        if (q.ground_truth == Answer::Invalid) {
          throw DatasetMismatch(dir.string() + ": bad ground_truth for " + q.id);
        }
        q.reward_a = t.at("reward_a").get<double>();
        q.reward_b = t.at("reward_b").get<double>();
        q.reward_gap = t.at("reward_gap").get<double>();
        q.difficulty = difficulty_from_string(t.at("difficulty").get<std::string>());
      }
    }
  } catch (const Json::exception& e) {
    throw IoError(dir.string() + ": " + e.what());
  } catch (const InvalidDesign& e) {
    throw IoError(dir.string() + ": " + e.what());
  }
  if (static_cast<int>(ds.questions.size()) != ds.manifest.question_count) {
    throw DatasetMismatch(dir.string() + ": manifest lists " +
                          std::to_string(ds.manifest.question_count) + " questions, file has " +
                          std::to_string(ds.questions.size()));
  }
  return ds;
}

std::string chat_answer(Answer a) { return std::string("The answer is ") + to_string(a); }

std::string chat_finetune_jsonl(std::span<const Question> questions) {
  std::string out;
  for (const Question& q : questions) {
    OrderedJson messages = OrderedJson::array();
    messages.push_back({{"role", "system"}, {"content", kChatSystemPrompt}});
    messages.push_back({{"role", "user"}, {"content", render_prompt(q, PromptVariant::Full)}});
    messages.push_back({{"role", "assistant"}, {"content", chat_answer(q.ground_truth)}});
    OrderedJson j;
    j["id"] = q.id;
    j["messages"] = std::move(messages);
    out += j.dump() + "\n";
  }
  return out;
}

void export_chat_finetune(std::span<const Question> questions, const std::filesystem::path& path) {
  write_text_file(path, chat_finetune_jsonl(questions));
}

}  // namespace voxbench
