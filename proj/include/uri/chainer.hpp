#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "uri/codec.hpp"
#include "uri/learner.hpp"

namespace uri {

struct Stage {
  LearnedModel model;
  /// Holdout accuracy measured before chaining.
  double accuracy = 1.0;
  std::string label;
};

struct StagePipeline {
  std::vector<Stage> stages;

  std::vector<double> accuracies() const;
};

/// Provenance of one predicted token.
struct TraceEntry {
  std::size_t stage = 0;
  std::size_t block = 0;
  TokenId token;
  Term term;
  std::vector<std::size_t> source_blocks;

  friend bool operator==(const TraceEntry&, const TraceEntry&) = default;
};

struct ChainTrace {
  std::vector<TraceEntry> entries;
  /// Blocks withheld from prediction, per stage.
  std::vector<std::vector<std::size_t>> abstained;
  std::size_t grown_blocks = 0;

  friend bool operator==(const ChainTrace&, const ChainTrace&) = default;
};

struct AbstentionPolicy {
  bool enabled = false;
  int radius = 3;
};

struct ClassifyResult {
  IntegracodedSequence sequence;
  std::vector<TraceEntry> predictions;
  std::vector<std::size_t> flagged;
  /// Blocks that had to grow past h to take a prediction.
  std::size_t grown_blocks = 0;
};

/// Evaluates every target model at every block of a snapshot of `seq` and
/// appends firing tokens marked predicted. Given tokens are never removed.
ClassifyResult classify_call(const IntegracodedSequence& seq, const LearnedModel& models,
                             const AbstentionPolicy& abstain = {}, std::size_t stage = 0);

struct ChainResult {
  IntegracodedSequence sequence;
  ChainTrace trace;
};

/// One classify_call per stage, each fed the previous stage's output.
ChainResult chain(const IntegracodedSequence& seq, const StagePipeline& pipeline,
                  const AbstentionPolicy& abstain = {});

/// Blocks within `radius` of two or more blocks carrying the same role token
/// of a relation (arity >= 2). Sorted ascending.
std::vector<std::size_t> detect_repeated_relations(const BlockPresenceFeatures& features,
                                                   const AugmentedVocabulary& vocab, int radius);
std::vector<std::size_t> detect_repeated_relations(const IntegracodedSequence& seq, int radius);

/// Union bound max(0, 1 - sum(1 - a_i)).
double soundness_bound(std::span<const double> accuracies);

// Pipeline manifest: one stage per line, `<model file> <accuracy>`, paths
// relative to the manifest's directory; `#` comments.
StagePipeline load_pipeline(const std::string& path, const AugmentedVocabulary& vocab);
// Trace file: tab-separated `stage block token term sources` per predicted token.
void write_trace(std::ostream& out, const ChainTrace& trace, const AugmentedVocabulary& vocab);

}  // namespace uri
