#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "uri/codec.hpp"
#include "uri/compiler.hpp"

namespace uri {

struct ExampleMeta {
  std::uint64_t scene = 0;
  std::uint64_t seed = 0;
};

struct LabeledExample {
  std::shared_ptr<const BlockPresenceFeatures> features;
  std::size_t target_block = 0;
  bool label = false;
  ExampleMeta meta;
};

/// Examples for several target tokens sharing one feature grid per scene.
struct LabeledDataset {
  struct Instance {
    std::shared_ptr<const BlockPresenceFeatures> features;
    std::size_t target_block = 0;
    ExampleMeta meta;
  };

  std::vector<TokenId> targets;
  std::vector<Instance> instances;
  /// labels[t][i] for targets[t] at instances[i].
  std::vector<std::vector<std::uint8_t>> labels;
  std::vector<std::string> warnings;

  std::vector<LabeledExample> examples(std::size_t target_index) const;
  double positive_rate(std::size_t target_index) const;
};

struct TrainingStats {
  std::size_t examples = 0;
  std::size_t positives = 0;
  std::size_t candidates = 0;  // terms harvested from positives and tested
  std::size_t surviving = 0;
  std::size_t uncovered_positives = 0;
  std::size_t mistakes = 0;
  std::size_t promotions = 0;
  std::size_t demotions = 0;
};

/// One row of the training log: an elimination level or a winnow pass.
struct LogRow {
  std::size_t pass = 0;
  std::size_t terms_alive = 0;
  std::size_t mistakes = 0;
};

struct WinnowModel {
  std::map<Term, double> weights;  // pool terms only; others contribute nothing
  double threshold = 1.0;
  double alpha = 2.0;
  std::size_t pool_size = 0;
};

/// Hypothesis for one unary target token in the relative frame.
struct TargetModel {
  TokenId target;
  int k = 0;
  int max_offset = 0;
  /// Tokens with smaller ids are not features.
  std::uint32_t first_token = 0;
  std::variant<KDnfFormula, WinnowModel> hypothesis;
  TrainingStats stats;
  std::vector<LogRow> log;

  bool predict(const BlockPresenceFeatures& features, std::size_t block) const;
  /// Term responsible for a positive prediction (highest weight for winnow).
  std::optional<Term> firing_term(const BlockPresenceFeatures& features, std::size_t block) const;
  std::size_t term_count() const;
};

struct LearnedModel {
  std::vector<TargetModel> targets;

  const TargetModel* find(TokenId target) const;
};

struct EliminationOptions {
  int k = 4;
  int max_offset = 3;
  /// Tokens with smaller ids are not features; original_size() restricts
  /// learning to the augmenting tokens.
  std::uint32_t first_token = 0;
  /// Negatives a term may fire on before it is eliminated.
  std::size_t negative_budget = 0;
  std::size_t max_candidates = 50'000'000;
};

struct WinnowOptions {
  int k = 2;
  int max_offset = 3;
  std::uint32_t first_token = 0;
  double alpha = 2.0;
  /// 0 selects the pool size.
  double threshold = 0.0;
  std::size_t passes = 1;
  std::size_t max_pool = 5'000'000;
};

/// Harvests <=k-subsets of positives' (offset, token) features and keeps the
/// minimal terms that fire on no more than `negative_budget` negatives.
TargetModel learn_elimination(std::span<const LabeledExample> train, TokenId target,
                              const EliminationOptions& options);
/// All targets of a dataset in one pass over the features.
LearnedModel learn_elimination(const LabeledDataset& train, const EliminationOptions& options);

/// Winnow2 over the term pool harvested from positives.
TargetModel learn_winnow(std::span<const LabeledExample> train, TokenId target,
                         const WinnowOptions& options);
LearnedModel learn_winnow(const LabeledDataset& train, const WinnowOptions& options);

struct EvalMetrics {
  std::size_t true_positives = 0;
  std::size_t true_negatives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
  std::size_t abstained = 0;

  std::size_t answered() const {
    return true_positives + true_negatives + false_positives + false_negatives;
  }
  std::size_t total() const { return answered() + abstained; }
  double error() const;
  double accuracy() const { return 1.0 - error(); }
  double false_positive_rate() const;
  double false_negative_rate() const;
  double coverage() const;
  EvalMetrics& operator+=(const EvalMetrics& other);
};

using AbstainPredicate = std::function<bool(const LabeledExample&)>;

/// Abstained examples are excluded from error and rate denominators.
EvalMetrics evaluate_model(const TargetModel& model, std::span<const LabeledExample> test,
                           const AbstainPredicate& abstain = {});

/// Consistent-learner sample bound (1/eps)(ln|H| + ln(1/delta)) with |H| = 2^terms.
double consistent_sample_bound(std::size_t hypothesis_terms, double epsilon, double delta);

// Model file: formula sections as in the formula file (winnow sections add
// `learner winnow theta <t> alpha <a>` to the header and `= <w>` to terms),
// each followed by a `# stats ...` trailer.
void write_model(std::ostream& out, const LearnedModel& model, const AugmentedVocabulary& vocab);
LearnedModel read_model(std::istream& in, const AugmentedVocabulary& vocab);
LearnedModel load_model(const std::string& path, const AugmentedVocabulary& vocab);
void write_training_log(std::ostream& out, const LearnedModel& model,
                        const AugmentedVocabulary& vocab);

}  // namespace uri
