#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "voxbench/endpoint.hpp"
#include "voxbench/envs.hpp"
#include "voxbench/episode.hpp"
#include "voxbench/qa.hpp"

namespace voxbench {

inline constexpr int kTrials = 3;

/// Share of predictions equal to the truth; Invalid never matches.
double accuracy(std::span<const Answer> predictions, std::span<const Answer> truths);

/// Per question, the mean agreement of trials 2..k with trial 1, averaged
/// over questions. Throws MissingTrial unless every row has `trials` answers.
double consistency(std::span<const std::vector<Answer>> trials, int expected_trials = kTrials);

/// More actuator voxels wins, then more voxels, then A.
Answer heuristic_answer(const Question& q);

struct Reply {
  Answer answer = Answer::Invalid;
  std::string raw;     // exact reply text, for the transcript
  bool fault = false;  // transport gave up after retries
};

class Answerer {
 public:
  virtual ~Answerer() = default;
  virtual std::string name() const = 0;
  /// Oracle-style answerers read ground truth and are for testing only.
  virtual bool needs_truth() const { return false; }
  /// `trial` counts from 1. Must be safe to call concurrently.
  virtual Reply select(const Question& q, const std::string& prompt, int trial) = 0;
};

std::unique_ptr<Answerer> make_oracle();
std::unique_ptr<Answerer> make_anti_oracle();
std::unique_ptr<Answerer> make_random(std::uint64_t seed);
std::unique_ptr<Answerer> make_constant(Answer letter);
std::unique_ptr<Answerer> make_heuristic();

/// Wire-protocol client for an external model. Implements both selection
/// and design generation.
class ExternalModel : public Answerer {
 public:
  explicit ExternalModel(std::unique_ptr<Transport> transport, RetryPolicy retry = {});

  std::string name() const override { return "external(" + transport_->describe() + ")"; }
  Reply select(const Question& q, const std::string& prompt, int trial) override;

  struct Generated {
    std::optional<MaterialMatrix> design;
    std::string error;  // protocol or parse problem when design is empty
    std::string raw;
    bool fault = false;
  };
  Generated generate(const std::string& id, const std::string& prompt, int trial);

  int faults() const { return faults_.load(); }

 private:
  // Returns nullopt once every attempt has failed.
  std::optional<std::string> call(std::string_view route, const std::string& body);

  std::unique_ptr<Transport> transport_;
  RetryPolicy retry_;
  std::atomic<int> faults_{0};
};

/// Request line for the wire protocol, keys in protocol order.
std::string wire_request(const std::string& id, int trial, std::string_view mode,
                         const std::string& prompt);

/// Builds an answerer from a CLI name: oracle, anti-oracle, random,
/// constant-A, constant-B, heuristic, or an endpoint spec (http://..., stdio:...).
std::unique_ptr<Answerer> make_answerer(std::string_view spec, std::uint64_t seed);

struct Score {
  std::optional<double> accuracy;  // empty when the subset has no questions
  std::optional<double> consistency;
  int questions = 0;
};

struct ScoreRow {
  std::string name;      // env id, category name or "Overall"
  std::string category;  // owning category; empty for category and overall rows
  Score easy;
  Score hard;
  Score all;
  int invalid = 0;       // Invalid answers across all trials
};

struct EvalReport {
  std::string answerer;
  PromptVariant variant = PromptVariant::Full;
  int trials = kTrials;
  std::vector<ScoreRow> envs;        // dataset order
  std::vector<ScoreRow> categories;  // unweighted means of member envs
  ScoreRow overall;                  // unweighted mean over envs
  int invalid = 0;
  int faults = 0;
};

struct TranscriptEntry {
  std::string id;
  std::string env;
  int trial = 1;
  Answer answer = Answer::Invalid;
  Answer truth = Answer::A;  // after the Worse flip
  std::string raw;
  bool fault = false;
};

struct EvalOptions {
  int trials = kTrials;
  int in_flight = 1;  // concurrent select() calls
};

struct EvalRun {
  EvalReport report;
  std::vector<TranscriptEntry> transcript;  // question order, then trial
};

/// Queries every question `trials` times under `variant`; Worse scores
/// against the flipped truth. Datasets must carry truth.
EvalRun run_eval(std::span<const Dataset> datasets, Answerer& answerer, PromptVariant variant,
                 const EvalOptions& options = {});

std::string report_csv(const EvalReport& report);
std::string report_markdown(const EvalReport& report);
std::string transcript_jsonl(std::span<const TranscriptEntry> transcript, PromptVariant variant);

struct GenCandidate {
  std::optional<MaterialMatrix> matrix;
  std::string error;  // why no matrix was obtained
};

struct GenRow {
  std::optional<MaterialMatrix> matrix;
  bool valid = false;
  std::string reason;  // empty when valid
  std::optional<double> reward;
};

struct GenReport {
  std::string env;
  std::vector<GenRow> rows;
  int valid_count = 0;
  int total = 0;
  std::optional<double> average;
  std::optional<double> best;
};

inline constexpr std::string_view kActuatorBudgetReason = "actuator budget exceeded";

/// Validates each candidate (validity plus at most `max_actuators`
/// actuators) and scores valid ones with the same controller search and
/// seeding as evolution, so an archived design reproduces its reward.
GenReport eval_generation(std::span<const GenCandidate> designs, const EnvInstance& env,
                          int controller_budget, std::uint64_t seed,
                          const FitnessSetup& setup = {},
                          int max_actuators = kMaxGeneratedActuators, int threads = 1);

std::string gen_report_csv(std::span<const GenReport> reports);
std::string gen_report_markdown(std::span<const GenReport> reports);
std::string gen_rows_jsonl(std::span<const GenReport> reports);

}  // namespace voxbench
