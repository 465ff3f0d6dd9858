#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "uri/chainer.hpp"
#include "uri/learner.hpp"
#include "uri/scenegen.hpp"

namespace uri {

// ---------------------------------------------------------------------------
// Cost model

struct CostModelParams {
  double d = 4096;
  double N = 8192;
  double h = 4;
  double g_prime = 2;
  int r = 2;

  double width() const { return h * g_prime; }
};

struct CostReport {
  CostModelParams params;
  double nominal = 0;      // d N^2 + d^2 N
  double integracode = 0;  // g' h d N
  double ratio = 0;
  bool saving_condition = false;  // 10 g'h <= min(d, N)
  double booleanized = 0;  // N^r
  double tokens = 0;       // h N
};

CostReport cost_model(const CostModelParams& params);
/// Two-column CSV `quantity,value`.
void write_cost_report(std::ostream& out, const CostReport& report);

// ---------------------------------------------------------------------------
// Compiled-formula oracle suite

struct OracleSuiteOptions {
  std::size_t rules = 200;
  std::size_t scenes_per_rule = 50;
  std::size_t max_blocks = 12;
  int max_arity_sum = 4;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
};

struct OracleSuiteResult {
  std::size_t rules = 0;
  std::size_t scenes = 0;
  std::size_t checks = 0;  // (scene, block, role) predictions compared
  std::size_t agreements = 0;
  std::size_t positives = 0;
  std::vector<std::string> disagreements;  // first few, for diagnosis

  double agreement() const {
    return checks == 0 ? 1.0 : static_cast<double>(agreements) / static_cast<double>(checks);
  }
};

/// Random rules over random vocabularies, random repeat-free scenes; compares
/// compiled absolute k-DNF predictions against apply_rule at every block and role.
OracleSuiteResult run_oracle_suite(const OracleSuiteOptions& options);
void write_oracle_csv(std::ostream& out, const OracleSuiteResult& result);

// ---------------------------------------------------------------------------
// Training and evaluation

struct LearnerConfig {
  std::string kind = "elimination";  // or "winnow"
  EliminationOptions elimination;
  WinnowOptions winnow;
  /// Learn over original tokens too (entity names, words).
  bool all_tokens = false;
};

LearnedModel train_model(const LabeledDataset& train, const LearnerConfig& config,
                         const AugmentedVocabulary& vocab);

/// Role tokens A^1..A^r of an attribute.
std::vector<TokenId> role_tokens(const AugmentedVocabulary& vocab, std::string_view attribute);

/// Pooled accuracy over all targets' predictions.
EvalMetrics evaluate_pooled(const LearnedModel& model, const LabeledDataset& test);

struct ChainEvaluation {
  std::vector<double> stage_accuracies;
  double bound = 0;
  EvalMetrics metrics;  // final-stage predictions against ground truth
  std::size_t grown_blocks = 0;
};

/// Hides every stage attribute (and whatever they hide), runs the pipeline
/// on the encoded scenes and scores the last stage's targets.
ChainEvaluation evaluate_chain(const DistributionSpec& spec, const StagePipeline& pipeline,
                               const std::vector<std::string>& stage_attributes,
                               std::uint64_t first_index, std::size_t n,
                               const AbstentionPolicy& abstain = {}, std::size_t threads = 1);

// ---------------------------------------------------------------------------
// Experiment runs

struct ExperimentConfig {
  std::string spec_path;  // empty: built-in default
  std::vector<std::string> rule_paths;
  /// Attributes learned in order; each stage's output feeds the next when chaining.
  std::vector<std::string> stages;
  LearnerConfig learner;
  std::size_t scenes = 3000;
  double train_split = 0.6;
  double valid_split = 0.2;
  double test_split = 0.2;
  std::uint64_t seed = 1;
  bool chain = false;
  AbstentionPolicy abstain;
  std::string out_dir = "out";
  std::size_t threads = 1;

  void validate() const;
};

// key=value lines: spec, rules (comma list), stages (comma list), learner,
// k, M, alpha, theta, passes, budget, all_tokens, scenes, split (three
// comma-separated ratios), seed, chain, abstain, radius, out.
ExperimentConfig read_experiment_config(std::istream& in, const std::string& base_dir = ".");
ExperimentConfig load_experiment_config(const std::string& path);

struct MetricsRow {
  std::size_t stage = 0;
  std::string target;
  EvalMetrics metrics;
  std::size_t terms = 0;
  double train_seconds = 0;
  double eval_seconds = 0;
};

struct ExperimentReport {
  std::vector<MetricsRow> rows;
  std::vector<double> stage_accuracies;
  std::optional<ChainEvaluation> chain;
  std::vector<std::string> files;  // written, relative to out_dir
};

/// generate -> train -> evaluate (-> chain). Writes metrics.csv, timings.csv,
/// stage models, chain.csv and manifest.txt into out_dir. A failing stage
/// leaves a FAILED marker naming it and rethrows.
ExperimentReport run_experiment(const ExperimentConfig& config);

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows);

/// FNV-1a 64 of a file's bytes, as 16 hex digits.
std::string file_digest(const std::string& path);
std::string fnv1a_hex(std::string_view bytes);

}  // namespace uri
