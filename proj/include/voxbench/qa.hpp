#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "voxbench/design.hpp"
#include "voxbench/evolution.hpp"

namespace voxbench {

enum class Answer : std::uint8_t { A, B, Invalid };

const char* to_string(Answer a);
/// "A" or "B"; anything else is Invalid.
Answer answer_from_string(std::string_view s);
inline Answer flipped(Answer a) {
  return a == Answer::A ? Answer::B : a == Answer::B ? Answer::A : Answer::Invalid;
}

enum class Difficulty : std::uint8_t { Easy, Hard };

const char* to_string(Difficulty d);
Difficulty difficulty_from_string(std::string_view s);

struct Question {
  std::string id;
  std::string env;
  MaterialMatrix design_a;
  MaterialMatrix design_b;
  double reward_a = 0.0;
  double reward_b = 0.0;
  Answer ground_truth = Answer::A;
  double reward_gap = 0.0;
  Difficulty difficulty = Difficulty::Hard;

  friend bool operator==(const Question&, const Question&) = default;
};

/// Pairs an archive's records at rank offsets 1, 2, 4, ... (taken round
/// robin, anchors in a seeded random order per offset) so gaps sweep from
/// tiny to large. Equal-reward and repeated pairs are skipped; the better
/// design lands on side A or B by a fair coin. Throws NotEnoughRecords
/// unless two records have different rewards.
std::vector<Question> build_pairs(const Archive& archive, int target_count, Rng& rng);

struct DifficultyPolicy {
  enum class Kind { Median, Threshold } kind = Kind::Median;
  double threshold = 0.0;  // Threshold only
};

/// Gap at or below the cut is Hard. The median cut is taken per env over
/// that env's questions (mean of the middle two for even counts).
void label_difficulty(std::vector<Question>& questions, const DifficultyPolicy& policy = {});

double median(std::vector<double> values);

enum class PromptVariant : std::uint8_t { Full, NoAct, NoEnv, Worse };

const char* to_string(PromptVariant v);
PromptVariant variant_from_string(std::string_view s);  // case-insensitive; throws ConfigError

inline constexpr std::string_view kActuationMarker = "Actuation mechanism:";
inline constexpr std::string_view kBetterInstruction =
    "Which design achieves the higher reward on this task? Answer with \"A\" or \"B\".";
inline constexpr std::string_view kWorseInstruction =
    "Select the worse design: which design achieves the lower reward on this task? "
    "Answer with \"A\" or \"B\".";
inline constexpr std::string_view kChatSystemPrompt =
    "You are a helpful assistant that answers multiple choice questions accurately";
inline constexpr int kMaxGeneratedActuators = 5;

std::string render_prompt(const Question& q, PromptVariant variant = PromptVariant::Full);

/// Prompt for direct design generation in `env_id`.
std::string render_generation_prompt(std::string_view env_id,
                                     int max_actuators = kMaxGeneratedActuators);

struct DatasetManifest {
  std::string env;
  int question_count = 0;
  int easy_count = 0;
  int hard_count = 0;
  double reward_gap_min = 0.0;
  double reward_gap_max = 0.0;
  double reward_min = 0.0;  // over the whole archive
  double reward_max = 0.0;
  std::uint64_t seed = 0;
  std::string difficulty_policy = "median";

  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<Question> questions;
};

DatasetManifest make_manifest(const Archive& archive, std::span<const Question> questions,
                              std::uint64_t seed, const DifficultyPolicy& policy = {});

inline constexpr std::string_view kQuestionsFile = "questions.jsonl";
inline constexpr std::string_view kTruthFile = "truth.jsonl";
inline constexpr std::string_view kManifestFile = "manifest.json";

/// Writes questions.jsonl (no rewards), truth.jsonl and manifest.json into `dir`.
void export_dataset(const Dataset& dataset, const std::filesystem::path& dir);
/// Reads a directory written by export_dataset. Without truth.jsonl the
/// rewards and labels stay at their defaults and `has_truth` is false.
Dataset import_dataset(const std::filesystem::path& dir, bool* has_truth = nullptr);

std::string questions_jsonl(std::span<const Question> questions);
std::string truth_jsonl(std::span<const Question> questions);
std::string manifest_json(const DatasetManifest& manifest);

/// One chat record per question: system, user (Full prompt), assistant.
std::string chat_finetune_jsonl(std::span<const Question> questions);
void export_chat_finetune(std::span<const Question> questions, const std::filesystem::path& path);
std::string chat_answer(Answer a);  // "The answer is A"

}  // namespace voxbench
