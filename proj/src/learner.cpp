#include "uri/learner.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "uri/error.hpp"
#include "uri/kernels.hpp"

namespace uri {

std::vector<LabeledExample> LabeledDataset::examples(std::size_t target_index) const {
  std::vector<LabeledExample> out;
  out.reserve(instances.size());
  for (std::size_t i = 0; i < instances.size(); ++i) {
    out.push_back({instances[i].features, instances[i].target_block,
                   labels.at(target_index)[i] != 0, instances[i].meta});
  }
  return out;
}

double LabeledDataset::positive_rate(std::size_t target_index) const {
  if (instances.empty()) return 0.0;
  const auto& l = labels.at(target_index);
  return static_cast<double>(std::count(l.begin(), l.end(), std::uint8_t{1})) /
         static_cast<double>(l.size());
}

namespace {

using kernels::Word;

// (offset, token) feature ids: f = (offset + M) * T + token.
struct FeatureSpace {
  int max_offset;
  std::size_t tokens;
  std::uint32_t first_token;

  std::size_t count() const { return static_cast<std::size_t>(2 * max_offset + 1) * tokens; }
  FeatureLiteral literal(std::uint32_t f) const {
    return {static_cast<int>(f / tokens) - max_offset,
            TokenId{static_cast<std::uint32_t>(f % tokens)}};
  }
};

std::vector<std::uint32_t> active_features(const BlockPresenceFeatures& features,
                                           std::size_t block, const FeatureSpace& space) {
  std::vector<std::uint32_t> out;
  for (int d = -space.max_offset; d <= space.max_offset; ++d) {
    const long b = static_cast<long>(block) + d;
    if (b < 0 || b >= static_cast<long>(features.blocks())) continue;
    for (TokenId t : features.active(static_cast<std::size_t>(b))) {
      if (t.value < space.first_token) continue;
      out.push_back(static_cast<std::uint32_t>(static_cast<std::size_t>(d + space.max_offset) *
                                                   space.tokens +
                                               t.value));
    }
  }
  return out;
}

// Packs up to k sorted feature ids into one word.
class KeyPacker {
 public:
  KeyPacker(std::size_t feature_count, int k)
      : bits_(static_cast<unsigned>(std::bit_width(feature_count + 1))) {
    if (static_cast<std::size_t>(k) * bits_ > 64) {
      throw ConfigError("k=" + std::to_string(k) + " with " + std::to_string(feature_count) +
                        " features exceeds the packed term key width");
    }
  }
  std::uint64_t pack(std::span<const std::uint32_t> features) const {
    std::uint64_t key = 0;
    for (std::size_t i = 0; i < features.size(); ++i) {
      key |= static_cast<std::uint64_t>(features[i] + 1) << (i * bits_);
    }
    return key;
  }

 private:
  unsigned bits_;
};

struct Prepared {
  FeatureSpace space;
  std::vector<std::vector<std::uint32_t>> active;
};

Prepared prepare(std::span<const std::shared_ptr<const BlockPresenceFeatures>> grids,
                 std::span<const std::size_t> blocks, int max_offset, std::uint32_t first_token) {
  if (grids.empty()) throw ConfigError("training needs at least one example");
  if (max_offset < 1) throw ConfigError("max offset M must be >= 1");
  Prepared p{{max_offset, grids.front()->tokens(), first_token}, {}};
  p.active.reserve(grids.size());
  for (std::size_t i = 0; i < grids.size(); ++i) {
    if (grids[i]->tokens() != p.space.tokens) {
      throw DataError("examples disagree on vocabulary size");
    }
    if (blocks[i] >= grids[i]->blocks()) throw DataError("example target block out of range");
    p.active.push_back(active_features(*grids[i], blocks[i], p.space));
  }
  return p;
}

Prepared prepare_examples(std::span<const LabeledExample> train, int max_offset,
                          std::uint32_t first_token) {
  std::vector<std::shared_ptr<const BlockPresenceFeatures>> grids;
  std::vector<std::size_t> blocks;
  for (const auto& e : train) {
    grids.push_back(e.features);
    blocks.push_back(e.target_block);
  }
  return prepare(grids, blocks, max_offset, first_token);
}

Prepared prepare_dataset(const LabeledDataset& ds, int max_offset, std::uint32_t first_token) {
  std::vector<std::shared_ptr<const BlockPresenceFeatures>> grids;
  std::vector<std::size_t> blocks;
  for (const auto& inst : ds.instances) {
    grids.push_back(inst.features);
    blocks.push_back(inst.target_block);
  }
  return prepare(grids, blocks, max_offset, first_token);
}

Term to_term(std::span<const std::uint32_t> feats, const FeatureSpace& space) {
  Term t;
  for (auto f : feats) t.push_back(space.literal(f));
  canonicalize(t);
  return t;
}

// Feature columns over examples, positives packed into the leading words.
class ColumnMatrix {
 public:
  ColumnMatrix(const Prepared& prep, const std::vector<bool>& labels) {
    std::size_t positives = 0;
    for (bool l : labels) positives += l;
    positives_ = positives;
    pos_words_ = (positives + 63) / 64;
    neg_words_ = (labels.size() - positives + 63) / 64;
    stride_ = pos_words_ + neg_words_;
    data_.assign(prep.space.count() * stride_, 0);
    std::size_t next_pos = 0;
    std::size_t next_neg = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const std::size_t bit = labels[i] ? next_pos++ : pos_words_ * 64 + next_neg++;
      for (auto f : prep.active[i]) {
        data_[f * stride_ + bit / 64] |= Word{1} << (bit % 64);
      }
    }
  }

  std::size_t positives() const { return positives_; }
  std::size_t pos_words() const { return pos_words_; }
  std::size_t neg_words() const { return neg_words_; }
  std::span<const Word> pos(std::uint32_t f) const { return {data_.data() + f * stride_, pos_words_}; }
  std::span<const Word> neg(std::uint32_t f) const {
    return {data_.data() + f * stride_ + pos_words_, neg_words_};
  }

 private:
  std::size_t positives_ = 0;
  std::size_t pos_words_ = 0;
  std::size_t neg_words_ = 0;
  std::size_t stride_ = 0;
  std::vector<Word> data_;
};

// AND of the given columns' region into `buf`; returns whether any bit is set.
template <typename Region>
bool conjoin(std::span<const std::uint32_t> feats, Region region, std::vector<Word>& buf) {
  if (buf.empty()) return false;
  const auto& k = kernels::active_kernels();
  if (feats.size() == 1) {
    const auto col = region(feats[0]);
    std::copy(col.begin(), col.end(), buf.begin());
  } else {
    k.bit_and(region(feats[0]).data(), region(feats[1]).data(), buf.data(), buf.size());
    for (std::size_t i = 2; i < feats.size(); ++i) {
      k.bit_and(buf.data(), region(feats[i]).data(), buf.data(), buf.size());
    }
  }
  return k.intersects(buf.data(), buf.data(), buf.size());
}

TargetModel eliminate(const Prepared& prep, const std::vector<bool>& labels, TokenId target,
                      const EliminationOptions& opt) {
  if (opt.k < 1) throw ConfigError("k must be >= 1");
  const auto& space = prep.space;
  const KeyPacker packer(space.count(), opt.k);
  const ColumnMatrix m(prep, labels);
  const auto& kern = kernels::active_kernels();

  TargetModel model{target, opt.k, opt.max_offset, opt.first_token,
                    KDnfFormula{target, opt.k, Frame::relative, {}}, {}, {}};
  model.stats.examples = labels.size();
  model.stats.positives = m.positives();

  std::vector<Word> pos_buf(m.pos_words());
  std::vector<Word> neg_buf(m.neg_words());
  auto pos_region = [&](std::uint32_t f) { return m.pos(f); };
  auto neg_region = [&](std::uint32_t f) { return m.neg(f); };
  auto negative_hits_ok = [&](std::span<const std::uint32_t> feats) {
    if (m.neg_words() == 0) return true;
    if (!conjoin(feats, neg_region, neg_buf)) return true;
    if (opt.negative_budget == 0) return false;
    return kern.popcount_and(neg_buf.data(), neg_buf.data(), neg_buf.size()) <=
           opt.negative_budget;
  };

  std::vector<std::vector<std::uint32_t>> survivors;
  std::vector<std::vector<std::uint32_t>> dead;
  std::unordered_set<std::uint64_t> dead_keys;

  auto consider = [&](std::vector<std::uint32_t> feats, std::vector<std::vector<std::uint32_t>>& next_dead,
                      std::unordered_set<std::uint64_t>& next_keys) {
    if (!conjoin(feats, pos_region, pos_buf)) return;  // no positive support
    if (++model.stats.candidates > opt.max_candidates) {
      throw ConfigError("elimination exceeded " + std::to_string(opt.max_candidates) +
                        " candidate terms; lower k or M");
    }
    if (negative_hits_ok(feats)) {
      survivors.push_back(std::move(feats));
    } else {
      next_keys.insert(packer.pack(feats));
      next_dead.push_back(std::move(feats));
    }
  };

  for (std::uint32_t f = 0; f < space.count(); ++f) consider({f}, dead, dead_keys);
  model.log.push_back({1, survivors.size(), dead.size()});

  for (int level = 2; level <= opt.k && !dead.empty(); ++level) {
    std::sort(dead.begin(), dead.end());
    std::vector<std::vector<std::uint32_t>> next_dead;
    std::unordered_set<std::uint64_t> next_keys;
    const std::size_t prefix = static_cast<std::size_t>(level - 2);
    std::vector<std::uint32_t> subset;
    for (std::size_t i = 0; i < dead.size(); ++i) {
      for (std::size_t j = i + 1; j < dead.size(); ++j) {
        if (!std::equal(dead[i].begin(), dead[i].begin() + static_cast<long>(prefix),
                        dead[j].begin())) {
          break;
        }
        std::vector<std::uint32_t> cand = dead[i];
        cand.push_back(dead[j].back());
        // every (level-1)-subset must be dead: a surviving subset subsumes
        // the candidate, an unsupported one rules it out.
        bool ok = true;
        for (std::size_t drop = 0; drop + 2 < cand.size() && ok; ++drop) {
          subset.clear();
          for (std::size_t c = 0; c < cand.size(); ++c) {
            if (c != drop) subset.push_back(cand[c]);
          }
          ok = dead_keys.contains(packer.pack(subset));
        }
        if (ok) consider(std::move(cand), next_dead, next_keys);
      }
    }
    dead = std::move(next_dead);
    dead_keys = std::move(next_keys);
    model.log.push_back({static_cast<std::size_t>(level), survivors.size(), dead.size()});
  }

  std::vector<Word> covered(m.pos_words(), 0);
  auto& formula = std::get<KDnfFormula>(model.hypothesis);
  for (const auto& s : survivors) {
    conjoin(s, pos_region, pos_buf);
    if (!covered.empty()) kern.bit_or_inplace(covered.data(), pos_buf.data(), covered.size());
    formula.terms.push_back(to_term(s, space));
  }
  formula.canonicalize();
  model.stats.surviving = formula.terms.size();
  model.stats.uncovered_positives =
      m.positives() - (covered.empty() ? 0 : kern.popcount_and(covered.data(), covered.data(), covered.size()));
  return model;
}

template <typename F>
void for_each_subset(std::span<const std::uint32_t> items, int k, F&& f) {
  std::vector<std::uint32_t> cur;
  auto rec = [&](auto&& self, std::size_t start) -> void {
    if (!cur.empty()) f(std::span<const std::uint32_t>(cur));
    if (cur.size() == static_cast<std::size_t>(k)) return;
    for (std::size_t i = start; i < items.size(); ++i) {
      cur.push_back(items[i]);
      self(self, i + 1);
      cur.pop_back();
    }
  };
  rec(rec, 0);
}

TargetModel winnow(const Prepared& prep, const std::vector<bool>& labels, TokenId target,
                   const WinnowOptions& opt) {
  if (opt.k < 1) throw ConfigError("k must be >= 1");
  if (!(opt.alpha > 1.0)) throw ConfigError("winnow promotion alpha must be > 1");
  if (opt.threshold < 0.0) throw ConfigError("winnow threshold must be > 0");
  const auto& space = prep.space;
  const KeyPacker packer(space.count(), opt.k);

  std::unordered_map<std::uint64_t, std::uint32_t> pool;
  std::vector<std::vector<std::uint32_t>> pool_terms;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!labels[i]) continue;
    for_each_subset(prep.active[i], opt.k, [&](std::span<const std::uint32_t> s) {
      if (pool.emplace(packer.pack(s), static_cast<std::uint32_t>(pool_terms.size())).second) {
        pool_terms.emplace_back(s.begin(), s.end());
        if (pool_terms.size() > opt.max_pool) {
          throw ConfigError("winnow term pool exceeded " + std::to_string(opt.max_pool) +
                            " terms; lower k or M");
        }
      }
    });
  }

  WinnowModel w;
  w.alpha = opt.alpha;
  w.pool_size = pool_terms.size();
  w.threshold = opt.threshold > 0.0 ? opt.threshold
                                    : std::max<double>(1.0, static_cast<double>(pool_terms.size()));
  std::vector<double> weight(pool_terms.size(), 1.0);

  TargetModel model{target, opt.k, opt.max_offset, opt.first_token, WinnowModel{}, {}, {}};
  model.stats.examples = labels.size();
  model.stats.candidates = pool_terms.size();
  for (bool l : labels) model.stats.positives += l;

  std::vector<std::uint32_t> hits;
  for (std::size_t pass = 1; pass <= std::max<std::size_t>(1, opt.passes); ++pass) {
    std::size_t mistakes = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      hits.clear();
      for_each_subset(prep.active[i], opt.k, [&](std::span<const std::uint32_t> s) {
        const auto it = pool.find(packer.pack(s));
        if (it != pool.end()) hits.push_back(it->second);
      });
      double score = 0.0;
      for (auto h : hits) score += weight[h];
      const bool predicted = score >= w.threshold;
      if (predicted == labels[i]) continue;
      ++mistakes;
      if (labels[i]) {
        ++model.stats.promotions;
        for (auto h : hits) weight[h] *= opt.alpha;
      } else {
        ++model.stats.demotions;
        for (auto h : hits) weight[h] /= opt.alpha;
      }
    }
    model.stats.mistakes += mistakes;
    const auto alive = static_cast<std::size_t>(
        std::count_if(weight.begin(), weight.end(), [](double x) { return x > 1.0; }));
    model.log.push_back({pass, alive, mistakes});
    if (mistakes == 0) break;
  }
  for (std::size_t t = 0; t < pool_terms.size(); ++t) {
    w.weights.emplace(to_term(pool_terms[t], space), weight[t]);
  }
  model.stats.surviving = static_cast<std::size_t>(
      std::count_if(weight.begin(), weight.end(), [&](double x) { return x >= w.threshold; }));
  model.hypothesis = std::move(w);
  return model;
}

std::vector<bool> labels_of(std::span<const LabeledExample> train) {
  std::vector<bool> out;
  out.reserve(train.size());
  for (const auto& e : train) out.push_back(e.label);
  return out;
}

std::vector<bool> labels_of(const LabeledDataset& ds, std::size_t t) {
  std::vector<bool> out(ds.labels.at(t).begin(), ds.labels.at(t).end());
  return out;
}

// Relative literals active around `block`.
std::vector<FeatureLiteral> active_literals(const BlockPresenceFeatures& features,
                                            std::size_t block, int max_offset,
                                            std::uint32_t first_token) {
  std::vector<FeatureLiteral> out;
  for (int d = -max_offset; d <= max_offset; ++d) {
    const long b = static_cast<long>(block) + d;
    if (b < 0 || b >= static_cast<long>(features.blocks())) continue;
    for (TokenId t : features.active(static_cast<std::size_t>(b))) {
      if (t.value >= first_token) out.push_back({d, t});
    }
  }
  return out;
}

// Calls f(term, weight) for each pool term active around `block`.
template <typename F>
void for_each_active_pool_term(const WinnowModel& w, const TargetModel& m,
                               const BlockPresenceFeatures& features, std::size_t block, F&& f) {
  const int k = m.k;
  const auto lits = active_literals(features, block, m.max_offset, m.first_token);
  Term cur;
  auto rec = [&](auto&& self, std::size_t start) -> void {
    if (!cur.empty()) {
      if (auto it = w.weights.find(cur); it != w.weights.end()) f(it->first, it->second);
    }
    if (cur.size() == static_cast<std::size_t>(k)) return;
    for (std::size_t i = start; i < lits.size(); ++i) {
      cur.push_back(lits[i]);
      self(self, i + 1);
      cur.pop_back();
    }
  };
  rec(rec, 0);
}

}  // namespace

TargetModel learn_elimination(std::span<const LabeledExample> train, TokenId target,
                              const EliminationOptions& options) {
  return eliminate(prepare_examples(train, options.max_offset, options.first_token), labels_of(train), target, options);
}

LearnedModel learn_elimination(const LabeledDataset& train, const EliminationOptions& options) {
  const Prepared prep = prepare_dataset(train, options.max_offset, options.first_token);
  LearnedModel out;
  for (std::size_t t = 0; t < train.targets.size(); ++t) {
    out.targets.push_back(eliminate(prep, labels_of(train, t), train.targets[t], options));
  }
  return out;
}

TargetModel learn_winnow(std::span<const LabeledExample> train, TokenId target,
                         const WinnowOptions& options) {
  return winnow(prepare_examples(train, options.max_offset, options.first_token), labels_of(train), target, options);
}

LearnedModel learn_winnow(const LabeledDataset& train, const WinnowOptions& options) {
  const Prepared prep = prepare_dataset(train, options.max_offset, options.first_token);
  LearnedModel out;
  for (std::size_t t = 0; t < train.targets.size(); ++t) {
    out.targets.push_back(winnow(prep, labels_of(train, t), train.targets[t], options));
  }
  return out;
}

bool TargetModel::predict(const BlockPresenceFeatures& features, std::size_t block) const {
  if (const auto* f = std::get_if<KDnfFormula>(&hypothesis)) return eval_dnf(*f, features, block);
  const auto& w = std::get<WinnowModel>(hypothesis);
  double score = 0.0;
  for_each_active_pool_term(w, *this, features, block,
                            [&](const Term&, double weight) { score += weight; });
  return score >= w.threshold;
}

std::optional<Term> TargetModel::firing_term(const BlockPresenceFeatures& features,
                                             std::size_t block) const {
  if (const auto* f = std::get_if<KDnfFormula>(&hypothesis)) {
    if (auto i = first_firing_term(*f, features, block)) return f->terms[*i];
    return std::nullopt;
  }
  if (!predict(features, block)) return std::nullopt;
  std::optional<Term> best;
  double best_weight = 0.0;
  for_each_active_pool_term(std::get<WinnowModel>(hypothesis), *this, features, block,
                            [&](const Term& t, double weight) {
                              if (!best || weight > best_weight ||
                                  (weight == best_weight && t < *best)) {
                                best = t;
                                best_weight = weight;
                              }
                            });
  return best;
}

std::size_t TargetModel::term_count() const {
  if (const auto* f = std::get_if<KDnfFormula>(&hypothesis)) return f->terms.size();
  return std::get<WinnowModel>(hypothesis).weights.size();
}

const TargetModel* LearnedModel::find(TokenId target) const {
  for (const auto& t : targets) {
    if (t.target == target) return &t;
  }
  return nullptr;
}

namespace {
double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}
}  // namespace

double EvalMetrics::error() const { return ratio(false_positives + false_negatives, answered()); }
double EvalMetrics::false_positive_rate() const {
  return ratio(false_positives, false_positives + true_negatives);
}
double EvalMetrics::false_negative_rate() const {
  return ratio(false_negatives, false_negatives + true_positives);
}
double EvalMetrics::coverage() const { return total() == 0 ? 1.0 : ratio(answered(), total()); }

EvalMetrics& EvalMetrics::operator+=(const EvalMetrics& o) {
  true_positives += o.true_positives;
  true_negatives += o.true_negatives;
  false_positives += o.false_positives;
  false_negatives += o.false_negatives;
  abstained += o.abstained;
  return *this;
}

EvalMetrics evaluate_model(const TargetModel& model, std::span<const LabeledExample> test,
                           const AbstainPredicate& abstain) {
  EvalMetrics m;
  for (const auto& e : test) {
    if (abstain && abstain(e)) {
      ++m.abstained;
      continue;
    }
    const bool p = model.predict(*e.features, e.target_block);
    if (p && e.label) ++m.true_positives;
    if (!p && !e.label) ++m.true_negatives;
    if (p && !e.label) ++m.false_positives;
    if (!p && e.label) ++m.false_negatives;
  }
  return m;
}

double consistent_sample_bound(std::size_t hypothesis_terms, double epsilon, double delta) {
  if (!(epsilon > 0.0 && epsilon < 1.0) || !(delta > 0.0 && delta < 1.0)) {
    throw ConfigError("epsilon and delta must lie in (0, 1)");
  }
  return (static_cast<double>(hypothesis_terms) * std::log(2.0) + std::log(1.0 / delta)) / epsilon;
}

// ---------------------------------------------------------------------------
// Model files

void write_model(std::ostream& out, const LearnedModel& model, const AugmentedVocabulary& vocab) {
  for (const auto& t : model.targets) {
    out << "target " << vocab.name(t.target) << " k " << t.k << " frame rel M " << t.max_offset
        << " first " << t.first_token;
    if (const auto* w = std::get_if<WinnowModel>(&t.hypothesis)) {
      out << " learner winnow theta " << w->threshold << " alpha " << w->alpha << '\n';
      for (const auto& [term, weight] : w->weights) {
        out << format_term(term, vocab) << " = " << weight << '\n';
      }
    } else {
      out << " learner elimination\n";
      for (const auto& term : std::get<KDnfFormula>(t.hypothesis).terms) {
        out << format_term(term, vocab) << '\n';
      }
    }
    const auto& s = t.stats;
    out << "# stats examples=" << s.examples << " positives=" << s.positives
        << " candidates=" << s.candidates << " surviving=" << s.surviving
        << " uncovered=" << s.uncovered_positives << " mistakes=" << s.mistakes
        << " promotions=" << s.promotions << " demotions=" << s.demotions << '\n';
  }
}

namespace {

void read_model_line(std::string line, LearnedModel& model, const AugmentedVocabulary& vocab) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.empty()) return;
  if (line.rfind("# stats", 0) == 0) {
    if (model.targets.empty()) return;
    auto& s = model.targets.back().stats;
    std::istringstream f(line.substr(7));
    std::string kv;
    while (f >> kv) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = kv.substr(0, eq);
      const std::size_t value = std::stoull(kv.substr(eq + 1));
      if (key == "examples") s.examples = value;
      else if (key == "positives") s.positives = value;
      else if (key == "candidates") s.candidates = value;
      else if (key == "surviving") s.surviving = value;
      else if (key == "uncovered") s.uncovered_positives = value;
      else if (key == "mistakes") s.mistakes = value;
      else if (key == "promotions") s.promotions = value;
      else if (key == "demotions") s.demotions = value;
    }
    return;
  }
  if (line[0] == '#') return;
  if (line.rfind("target ", 0) == 0) {
    std::istringstream f(line);
    std::string kw, target, key;
    f >> kw >> target;
    TargetModel t{vocab.token(target), 0, 0, 0, KDnfFormula{}, {}, {}};
    std::string learner = "elimination";
    std::string frame = "rel";
    double theta = 1.0;
    double alpha = 2.0;
    while (f >> key) {
      std::string value;
      if (!(f >> value)) throw DataError("model header: key '" + key + "' has no value");
      if (key == "k") t.k = std::stoi(value);
      else if (key == "frame") frame = value;
      else if (key == "M") t.max_offset = std::stoi(value);
      else if (key == "first") t.first_token = static_cast<std::uint32_t>(std::stoul(value));
      else if (key == "learner") learner = value;
      else if (key == "theta") theta = std::stod(value);
      else if (key == "alpha") alpha = std::stod(value);
      else throw DataError("model header: unknown key '" + key + "'");
    }
    if (frame != "rel" && frame != "abs") throw DataError("model header: bad frame '" + frame + "'");
    if (learner == "winnow") {
      WinnowModel w;
      w.threshold = theta;
      w.alpha = alpha;
      t.hypothesis = std::move(w);
    } else if (learner == "elimination") {
      t.hypothesis = KDnfFormula{t.target, t.k,
                                 frame == "abs" ? Frame::absolute : Frame::relative, {}};
    } else {
      throw DataError("model header: unknown learner '" + learner + "'");
    }
    model.targets.push_back(std::move(t));
    return;
  }
  if (model.targets.empty()) throw DataError("model term before any 'target' header");
  auto& t = model.targets.back();
  if (auto* w = std::get_if<WinnowModel>(&t.hypothesis)) {
    const auto eq = line.rfind('=');
    if (eq == std::string::npos) throw DataError("winnow term without weight: '" + line + "'");
    w->weights[parse_term(std::string_view(line).substr(0, eq), vocab)] =
        std::stod(line.substr(eq + 1));
    w->pool_size = w->weights.size();
  } else {
    std::get<KDnfFormula>(t.hypothesis).terms.push_back(parse_term(line, vocab));
  }
}

}  // namespace

LearnedModel read_model(std::istream& in, const AugmentedVocabulary& vocab) {
  LearnedModel model;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    try {
      read_model_line(line, model, vocab);
    } catch (const std::invalid_argument&) {
      throw DataError("model line " + std::to_string(line_no) + ": bad number in '" + line + "'");
    } catch (const std::out_of_range&) {
      throw DataError("model line " + std::to_string(line_no) + ": number out of range");
    }
  }
  return model;
}

LearnedModel load_model(const std::string& path, const AugmentedVocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open model file '" + path + "'");
  return read_model(in, vocab);
}

void write_training_log(std::ostream& out, const LearnedModel& model,
                        const AugmentedVocabulary& vocab) {
  out << "target,pass,terms_alive,mistakes\n";
  for (const auto& t : model.targets) {
    for (const auto& row : t.log) {
      out << vocab.name(t.target) << ',' << row.pass << ',' << row.terms_alive << ','
          << row.mistakes << '\n';
    }
  }
}

}  // namespace uri
