#include "uri/chainer.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "uri/error.hpp"

namespace uri {

std::vector<double> StagePipeline::accuracies() const {
  std::vector<double> out;
  for (const auto& s : stages) out.push_back(s.accuracy);
  return out;
}

std::vector<std::size_t> detect_repeated_relations(const BlockPresenceFeatures& features,
                                                   const AugmentedVocabulary& vocab, int radius) {
  if (radius < 1) throw ConfigError("repeat-detection radius must be >= 1");
  const std::size_t n = features.blocks();
  std::vector<bool> flagged(n, false);
  std::vector<std::size_t> where;
  for (std::uint32_t t = 0; t < vocab.size(); ++t) {
    const auto role = vocab.role_of(TokenId{t});
    if (!role || vocab.attributes()[role->attribute].arity < 2) continue;
    where.clear();
    for (std::size_t b = 0; b < n; ++b) {
      if (features.test(b, TokenId{t})) where.push_back(b);
    }
    if (where.size() < 2) continue;
    const auto r = static_cast<std::size_t>(radius);
    for (std::size_t b = 0; b < n; ++b) {
      // occurrences inside [b - r, b + r]
      const auto lo = std::lower_bound(where.begin(), where.end(), b >= r ? b - r : 0);
      const auto hi = std::upper_bound(where.begin(), where.end(), b + r);
      if (hi - lo >= 2) flagged[b] = true;
    }
  }
  std::vector<std::size_t> out;
  for (std::size_t b = 0; b < n; ++b) {
    if (flagged[b]) out.push_back(b);
  }
  return out;
}

std::vector<std::size_t> detect_repeated_relations(const IntegracodedSequence& seq, int radius) {
  return detect_repeated_relations(to_block_presence(seq), seq.vocab(), radius);
}

ClassifyResult classify_call(const IntegracodedSequence& seq, const LearnedModel& models,
                             const AbstentionPolicy& abstain, std::size_t stage) {
  const BlockPresenceFeatures snapshot = to_block_presence(seq);
  ClassifyResult result{seq, {}, {}, 0};
  std::vector<bool> skip(seq.size(), false);
  if (abstain.enabled) {
    result.flagged = detect_repeated_relations(snapshot, seq.vocab(), abstain.radius);
    for (auto b : result.flagged) skip[b] = true;
  }
  std::vector<bool> grown(seq.size(), false);
  for (std::size_t b = 0; b < seq.size(); ++b) {
    if (skip[b]) continue;
    for (const auto& target : models.targets) {
      if (target.target.value >= seq.vocab().size()) {
        throw DataError("model target outside the sequence vocabulary");
      }
      if (result.sequence.contains(b, target.target)) continue;
      auto term = target.firing_term(snapshot, b);
      if (!term) continue;
      if (result.sequence.add_token(b, target.target, Provenance::predicted)) grown[b] = true;
      std::vector<std::size_t> sources;
      for (const auto& lit : *term) {
        sources.push_back(static_cast<std::size_t>(static_cast<long>(b) + lit.block));
      }
      std::sort(sources.begin(), sources.end());
      sources.erase(std::unique(sources.begin(), sources.end()), sources.end());
      result.predictions.push_back({stage, b, target.target, std::move(*term), std::move(sources)});
    }
  }
  result.grown_blocks = static_cast<std::size_t>(std::count(grown.begin(), grown.end(), true));
  return result;
}

ChainResult chain(const IntegracodedSequence& seq, const StagePipeline& pipeline,
                  const AbstentionPolicy& abstain) {
  ChainResult out{seq, {}};
  for (std::size_t s = 0; s < pipeline.stages.size(); ++s) {
    auto step = classify_call(out.sequence, pipeline.stages[s].model, abstain, s);
    out.sequence = std::move(step.sequence);
    out.trace.entries.insert(out.trace.entries.end(),
                             std::make_move_iterator(step.predictions.begin()),
                             std::make_move_iterator(step.predictions.end()));
    out.trace.abstained.push_back(std::move(step.flagged));
    out.trace.grown_blocks += step.grown_blocks;
  }
  return out;
}

double soundness_bound(std::span<const double> accuracies) {
  double slack = 0.0;
  for (double a : accuracies) {
    if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("stage accuracy outside [0, 1]");
    slack += 1.0 - a;
  }
  return std::max(0.0, 1.0 - slack);
}

StagePipeline load_pipeline(const std::string& path, const AugmentedVocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open pipeline manifest '" + path + "'");
  const auto dir = std::filesystem::path(path).parent_path();
  StagePipeline pipeline;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream f(line);
    std::string model_path;
    if (!(f >> model_path)) continue;
    double accuracy = 0.0;
    if (!(f >> accuracy)) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected '<model> <accuracy>'");
    }
    if (accuracy < 0.0 || accuracy > 1.0) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": accuracy must lie in [0, 1]");
    }
    std::filesystem::path p(model_path);
    if (p.is_relative()) p = dir / p;
    pipeline.stages.push_back({load_model(p.string(), vocab), accuracy, model_path});
  }
  return pipeline;
}

void write_trace(std::ostream& out, const ChainTrace& trace, const AugmentedVocabulary& vocab) {
  for (const auto& e : trace.entries) {
    out << e.stage << '\t' << e.block << '\t' << vocab.name(e.token) << '\t'
        << format_term(e.term, vocab) << '\t';
    for (std::size_t i = 0; i < e.source_blocks.size(); ++i) {
      out << (i ? "," : "") << e.source_blocks[i];
    }
    out << '\n';
  }
}

}  // namespace uri
