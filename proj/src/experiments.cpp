#include "uri/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "uri/error.hpp"
#include "uri/parallel.hpp"
#include "uri/random.hpp"

namespace uri {

namespace fs = std::filesystem;

CostReport cost_model(const CostModelParams& p) {
  if (!(p.d > 0 && p.N > 0 && p.h > 0 && p.g_prime > 0) || p.r < 1) {
    throw ConfigError("cost model parameters must be positive");
  }
  CostReport r;
  r.params = p;
  r.nominal = p.d * p.N * p.N + p.d * p.d * p.N;
  r.integracode = p.g_prime * p.h * p.d * p.N;
  r.ratio = r.nominal / r.integracode;
  r.saving_condition = 10.0 * p.width() <= std::min(p.d, p.N);
  r.booleanized = std::pow(p.N, p.r);
  r.tokens = p.h * p.N;
  return r;
}

void write_cost_report(std::ostream& out, const CostReport& r) {
  std::ostringstream s;
  s << std::setprecision(12);
  s << "quantity,value\n"
    << "d," << r.params.d << "\nN," << r.params.N << "\nh," << r.params.h << "\ng_prime,"
    << r.params.g_prime << "\nr," << r.params.r << "\nW," << r.params.width()
    << "\nnominal_cost," << r.nominal << "\nintegracode_cost," << r.integracode << "\nratio,"
    << r.ratio << "\nsaving_condition," << (r.saving_condition ? "true" : "false")
    << "\nbooleanized_variables," << r.booleanized << "\nintegracode_tokens," << r.tokens << '\n';
  out << s.str();
}

// ---------------------------------------------------------------------------
// Oracle suite

namespace {

constexpr std::uint64_t kRuleStream = 11;
constexpr std::uint64_t kSuiteSceneStream = 12;

struct RandomRule {
  VocabularyPtr vocab;
  CoreRule rule;
};

std::optional<ConjunctiveExpression> random_disjunct(Rng& rng, const std::vector<Attribute>& attrs,
                                                     const std::vector<std::string>& rhs_vars,
                                                     int max_sum) {
  const std::vector<std::string> extra{"s", "t", "u", "v"};
  std::vector<AtomPattern> atoms;
  int budget = max_sum;
  const std::size_t atom_count = 1 + rng.below(3);
  for (std::size_t a = 0; a < atom_count && budget > 0; ++a) {
    std::vector<const Attribute*> fit;
    for (const auto& at : attrs) {
      if (at.arity <= budget) fit.push_back(&at);
    }
    if (fit.empty()) break;
    const Attribute& at = *fit[rng.below(fit.size())];
    std::vector<std::string> vars;
    while (static_cast<int>(vars.size()) < at.arity) {
      const bool free_var = rng.bernoulli(0.6);
      const auto& pool = free_var ? rhs_vars : extra;
      const auto& v = pool[rng.below(pool.size())];
      if (std::find(vars.begin(), vars.end(), v) == vars.end()) vars.push_back(v);
    }
    budget -= at.arity;
    atoms.push_back({at.name, std::move(vars)});
  }
  std::vector<std::string> used;
  for (const auto& a : atoms) used.insert(used.end(), a.vars.begin(), a.vars.end());
  for (const auto& v : rhs_vars) {
    if (std::find(used.begin(), used.end(), v) == used.end()) return std::nullopt;
  }
  std::vector<std::string> existential;
  for (const auto& v : extra) {
    if (std::find(used.begin(), used.end(), v) != used.end()) existential.push_back(v);
  }
  return ConjunctiveExpression(std::move(atoms), rhs_vars, std::move(existential));
}

RandomRule random_rule(std::uint64_t seed, std::size_t index, int max_sum) {
  Rng rng(seed, index, kRuleStream);
  std::vector<Attribute> attrs;
  const std::size_t count = 2 + rng.below(4);
  for (std::size_t i = 0; i < count; ++i) {
    attrs.push_back({std::string(1, static_cast<char>('A' + i)), 1 + static_cast<int>(rng.below(3))});
  }
  const int rhs_arity = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::min(3, max_sum))));
  std::vector<std::string> rhs_vars;
  for (int i = 0; i < rhs_arity; ++i) rhs_vars.push_back(std::string(1, static_cast<char>('x' + i)));
  std::vector<ConjunctiveExpression> lhs;
  const std::size_t disjuncts = 1 + rng.below(2);
  for (std::size_t attempt = 0; lhs.size() < disjuncts && attempt < 10000; ++attempt) {
    if (auto d = random_disjunct(rng, attrs, rhs_vars, max_sum)) lhs.push_back(std::move(*d));
  }
  if (lhs.empty()) throw InvariantError("random rule generation found no valid disjunct");
  auto all = attrs;
  all.push_back({"R", rhs_arity});
  auto vocab = std::make_shared<const AugmentedVocabulary>(AugmentedVocabulary::define(
      {"e0", "e1", "e2", "e3", "e4", "e5"}, std::move(all), {"w"}));
  CoreRule rule("r" + std::to_string(index), std::move(lhs), "R", rhs_vars);
  rule.validate(*vocab);
  return {std::move(vocab), std::move(rule)};
}

Scene random_repeat_free_scene(Rng& rng, const RandomRule& rr, std::size_t max_blocks) {
  const std::size_t n = 4 + rng.below(max_blocks - 3);
  const std::size_t entity_count = 2 + rng.below(std::min<std::size_t>(6, n) - 1);
  std::vector<std::size_t> blocks(n);
  for (std::size_t i = 0; i < n; ++i) blocks[i] = i;
  rng.shuffle(blocks);
  Scene s(n);
  std::vector<EntityId> ids;
  for (std::size_t i = 0; i < entity_count; ++i) {
    ids.push_back(s.add_entity("e" + std::to_string(i), blocks[i]));
  }
  for (std::size_t b = 0; b < n; ++b) {
    if (!s.entity_at(b)) s.set_word(b, "w");
  }
  auto pick = [&](std::size_t k) {
    auto v = ids;
    rng.shuffle(v);
    v.resize(k);
    return v;
  };
  // Plant a disjunct half the time so positives are common.
  if (rng.bernoulli(0.5)) {
    const auto& d = rr.rule.lhs()[rng.below(rr.rule.lhs().size())];
    const auto vars = d.variables();
    std::vector<std::string> seen;
    bool repeat = false;
    for (const auto& a : d.atoms()) {
      if (std::find(seen.begin(), seen.end(), a.attribute) != seen.end()) repeat = true;
      seen.push_back(a.attribute);
    }
    if (!repeat && vars.size() <= ids.size()) {
      const auto chosen = pick(vars.size());
      for (const auto& a : d.atoms()) {
        std::vector<EntityId> args;
        for (const auto& v : a.vars) {
          args.push_back(chosen[static_cast<std::size_t>(std::find(vars.begin(), vars.end(), v) - vars.begin())]);
        }
        s.add_atom(a.attribute, std::move(args));
      }
    }
  }
  for (const auto& at : rr.vocab->attributes()) {
    if (at.name == "R" || !s.atoms_of(at.name).empty()) continue;
    if (static_cast<std::size_t>(at.arity) > ids.size() || !rng.bernoulli(0.5)) continue;
    s.add_atom(at.name, pick(static_cast<std::size_t>(at.arity)));
  }
  return s;
}

}  // namespace

OracleSuiteResult run_oracle_suite(const OracleSuiteOptions& options) {
  if (options.max_blocks < 4) throw ConfigError("oracle suite needs max_blocks >= 4");
  if (options.max_arity_sum < 1) throw ConfigError("oracle suite needs max_arity_sum >= 1");
  std::vector<OracleSuiteResult> parts(options.rules);
  parallel_for(options.rules, options.threads, [&](std::size_t i) {
    const RandomRule rr = random_rule(options.seed, i, options.max_arity_sum);
    OracleSuiteResult& res = parts[i];
    res.rules = 1;
    // formulas[N][position][role-1]
    std::map<std::size_t, std::vector<std::vector<KDnfFormula>>> formulas;
    for (std::size_t s = 0; s < options.scenes_per_rule; ++s) {
      Rng rng(options.seed, i * options.scenes_per_rule + s, kSuiteSceneStream);
      const Scene scene = random_repeat_free_scene(rng, rr, options.max_blocks);
      if (scene.has_repeated_attribute()) throw InvariantError("oracle suite drew a repeated attribute");
      ++res.scenes;
      const std::size_t n = scene.blocks();
      auto& table = formulas[n];
      if (table.empty()) {
        table.resize(n);
        for (std::size_t p = 0; p < n; ++p) {
          for (int role = 1; role <= rr.rule.rhs_arity(); ++role) {
            table[p].push_back(compile_rule_absolute(rr.rule, *rr.vocab, n, p, role));
          }
        }
      }
      const auto features = scene_presence(scene, *rr.vocab);
      const auto derived = apply_rule(scene, rr.rule);
      for (int role = 1; role <= rr.rule.rhs_arity(); ++role) {
        std::vector<bool> truth(n, false);
        for (const auto& a : derived) {
          truth[scene.entity(a.args[static_cast<std::size_t>(role - 1)]).position] = true;
        }
        for (std::size_t p = 0; p < n; ++p) {
          const bool predicted = eval_dnf(table[p][static_cast<std::size_t>(role - 1)], features, p);
          ++res.checks;
          res.positives += truth[p];
          if (predicted == truth[p]) {
            ++res.agreements;
          } else if (res.disagreements.size() < 5) {
            res.disagreements.push_back(to_string(rr.rule) + " | block " + std::to_string(p) +
                                        " role " + std::to_string(role) + " predicted " +
                                        (predicted ? "1" : "0"));
          }
        }
      }
    }
  });
  OracleSuiteResult total;
  for (auto& p : parts) {
    total.rules += p.rules;
    total.scenes += p.scenes;
    total.checks += p.checks;
    total.agreements += p.agreements;
    total.positives += p.positives;
    for (auto& d : p.disagreements) {
      if (total.disagreements.size() < 10) total.disagreements.push_back(std::move(d));
    }
  }
  return total;
}

void write_oracle_csv(std::ostream& out, const OracleSuiteResult& r) {
  out << "rules,scenes,checks,positives,agreements,agreement\n"
      << r.rules << ',' << r.scenes << ',' << r.checks << ',' << r.positives << ','
      << r.agreements << ',' << std::setprecision(6) << std::fixed << r.agreement() << '\n';
  out.unsetf(std::ios::floatfield);
}

// ---------------------------------------------------------------------------
// Training and evaluation

std::vector<TokenId> role_tokens(const AugmentedVocabulary& vocab, std::string_view attribute) {
  const auto* a = vocab.attribute(attribute);
  if (!a) throw ConfigError("unknown attribute '" + std::string(attribute) + "'");
  std::vector<TokenId> out;
  for (int r = 1; r <= a->arity; ++r) out.push_back(vocab.role_token(attribute, r));
  return out;
}

LearnedModel train_model(const LabeledDataset& train, const LearnerConfig& config,
                         const AugmentedVocabulary& vocab) {
  const auto first = config.all_tokens ? 0U : static_cast<std::uint32_t>(vocab.original_size());
  if (config.kind == "elimination") {
    auto o = config.elimination;
    o.first_token = first;
    return learn_elimination(train, o);
  }
  if (config.kind == "winnow") {
    auto o = config.winnow;
    o.first_token = first;
    return learn_winnow(train, o);
  }
  throw ConfigError("unknown learner '" + config.kind + "' (expected elimination or winnow)");
}

EvalMetrics evaluate_pooled(const LearnedModel& model, const LabeledDataset& test) {
  EvalMetrics total;
  for (std::size_t t = 0; t < test.targets.size(); ++t) {
    const auto* m = model.find(test.targets[t]);
    if (!m) throw DataError("model has no formula for a dataset target");
    total += evaluate_model(*m, test.examples(t));
  }
  return total;
}

ChainEvaluation evaluate_chain(const DistributionSpec& spec, const StagePipeline& pipeline,
                               const std::vector<std::string>& stage_attributes,
                               std::uint64_t first_index, std::size_t n,
                               const AbstentionPolicy& abstain, std::size_t threads) {
  if (stage_attributes.empty()) throw ConfigError("chain evaluation needs at least one stage");
  const auto& vocab = *spec.vocab;
  std::set<std::string> hidden;
  for (const auto& a : stage_attributes) {
    for (auto& h : hidden_attributes(spec, a)) hidden.insert(std::move(h));
  }
  const std::string& final_attr = stage_attributes.back();
  const auto targets = role_tokens(vocab, final_attr);

  ChainEvaluation out;
  out.stage_accuracies = pipeline.accuracies();
  out.bound = soundness_bound(out.stage_accuracies);
  const auto scenes = sample_scenes(spec, n, first_index, threads);
  std::vector<EvalMetrics> per_scene(n);
  std::vector<std::size_t> grown(n, 0);
  parallel_for(n, threads, [&](std::size_t i) {
    Scene visible = scenes[i];
    for (const auto& a : hidden) visible.remove_attribute(a);
    const std::size_t h = spec.h ? spec.h : std::max<std::size_t>(2, required_block_size(visible));
    const auto result = chain(encode_scene(visible, h, spec.vocab), pipeline, abstain);
    grown[i] = result.trace.grown_blocks;
    std::vector<bool> withheld(visible.blocks(), false);
    if (!result.trace.abstained.empty()) {
      for (auto b : result.trace.abstained.back()) withheld[b] = true;
    }
    for (std::size_t t = 0; t < targets.size(); ++t) {
      const auto truth = role_labels(scenes[i], final_attr, static_cast<int>(t + 1));
      for (std::size_t b = 0; b < visible.blocks(); ++b) {
        auto& m = per_scene[i];
        if (withheld[b]) {
          ++m.abstained;
          continue;
        }
        const bool p = result.sequence.contains(b, targets[t]);
        if (p && truth[b]) ++m.true_positives;
        if (!p && !truth[b]) ++m.true_negatives;
        if (p && !truth[b]) ++m.false_positives;
        if (!p && truth[b]) ++m.false_negatives;
      }
    }
  });
  for (std::size_t i = 0; i < n; ++i) {
    out.metrics += per_scene[i];
    out.grown_blocks += grown[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Experiment runs

void ExperimentConfig::validate() const {
  if (scenes < 3) throw ConfigError("experiment needs at least 3 scenes");
  for (double s : {train_split, valid_split, test_split}) {
    if (!(s >= 0.0 && s <= 1.0)) throw ConfigError("split ratios must lie in [0, 1]");
  }
  if (std::abs(train_split + valid_split + test_split - 1.0) > 1e-9) {
    throw ConfigError("split ratios must sum to 1");
  }
  if (train_split == 0.0 || test_split == 0.0) {
    throw ConfigError("train and test splits must be nonzero");
  }
  if (!spec_path.empty() && !fs::exists(spec_path)) {
    throw ConfigError("spec file '" + spec_path + "' does not exist");
  }
  for (const auto& r : rule_paths) {
    if (!fs::exists(r)) throw ConfigError("rule file '" + r + "' does not exist");
  }
  if (learner.kind != "elimination" && learner.kind != "winnow") {
    throw ConfigError("unknown learner '" + learner.kind + "'");
  }
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream f(s);
  std::string item;
  while (std::getline(f, item, ',')) {
    if (!trim(item).empty()) out.push_back(trim(item));
  }
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  std::istringstream f(v);
  T x{};
  if (!(f >> x) || !(f >> std::ws).eof()) {
    throw ConfigError("config key '" + key + "': bad number '" + v + "'");
  }
  return x;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key '" + key + "': expected true or false, got '" + v + "'");
}

std::string fmt(double x) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(6) << x;
  return s.str();
}

}  // namespace

ExperimentConfig read_experiment_config(std::istream& in, const std::string& base_dir) {
  ExperimentConfig c;
  auto resolve = [&](const std::string& p) {
    const fs::path path(p);
    return (path.is_relative() ? fs::path(base_dir) / path : path).string();
  };
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string v = trim(line.substr(eq + 1));
    if (key == "spec") c.spec_path = resolve(v);
    else if (key == "rules") {
      c.rule_paths.clear();
      for (const auto& p : split_list(v)) c.rule_paths.push_back(resolve(p));
    } else if (key == "stages") c.stages = split_list(v);
    else if (key == "learner") c.learner.kind = v;
    else if (key == "k") c.learner.elimination.k = c.learner.winnow.k = parse_number<int>(key, v);
    else if (key == "M") {
      c.learner.elimination.max_offset = c.learner.winnow.max_offset = parse_number<int>(key, v);
    } else if (key == "alpha") c.learner.winnow.alpha = parse_number<double>(key, v);
    else if (key == "theta") c.learner.winnow.threshold = parse_number<double>(key, v);
    else if (key == "passes") c.learner.winnow.passes = parse_number<std::size_t>(key, v);
    else if (key == "budget") c.learner.elimination.negative_budget = parse_number<std::size_t>(key, v);
    else if (key == "all_tokens") c.learner.all_tokens = parse_bool(key, v);
    else if (key == "scenes") c.scenes = parse_number<std::size_t>(key, v);
    else if (key == "split") {
      const auto parts = split_list(v);
      if (parts.size() != 3) throw ConfigError("config key 'split': expected train,valid,test");
      c.train_split = parse_number<double>(key, parts[0]);
      c.valid_split = parse_number<double>(key, parts[1]);
      c.test_split = parse_number<double>(key, parts[2]);
    } else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, v);
    else if (key == "chain") c.chain = parse_bool(key, v);
    else if (key == "abstain") c.abstain.enabled = parse_bool(key, v);
    else if (key == "radius") c.abstain.radius = parse_number<int>(key, v);
    else if (key == "out") c.out_dir = resolve(v);
    else if (key == "threads") c.threads = parse_number<std::size_t>(key, v);
    else throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
  }
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open experiment config '" + path + "'");
  return read_experiment_config(in, fs::path(path).parent_path().string());
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
  out << "stage,target,error,false_positive_rate,false_negative_rate,coverage,terms,tp,tn,fp,fn,"
         "abstained\n";
  for (const auto& r : rows) {
    const auto& m = r.metrics;
    out << r.stage << ',' << r.target << ',' << fmt(m.error()) << ',' << fmt(m.false_positive_rate())
        << ',' << fmt(m.false_negative_rate()) << ',' << fmt(m.coverage()) << ',' << r.terms << ','
        << m.true_positives << ',' << m.true_negatives << ',' << m.false_positives << ','
        << m.false_negatives << ',' << m.abstained << '\n';
  }
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << h;
  return s.str();
}

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read '" + path + "' for digest");
  std::ostringstream s;
  s << in.rdbuf();
  return fnv1a_hex(s.str());
}

namespace {

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << content;
}

std::string config_text(const ExperimentConfig& c) {
  std::ostringstream s;
  s << "spec=" << c.spec_path << "\nrules=";
  for (std::size_t i = 0; i < c.rule_paths.size(); ++i) s << (i ? "," : "") << c.rule_paths[i];
  s << "\nstages=";
  for (std::size_t i = 0; i < c.stages.size(); ++i) s << (i ? "," : "") << c.stages[i];
  s << "\nlearner=" << c.learner.kind << "\nk="
    << (c.learner.kind == "winnow" ? c.learner.winnow.k : c.learner.elimination.k)
    << "\nM=" << c.learner.elimination.max_offset << "\nalpha=" << c.learner.winnow.alpha
    << "\ntheta=" << c.learner.winnow.threshold << "\npasses=" << c.learner.winnow.passes
    << "\nbudget=" << c.learner.elimination.negative_budget
    << "\nall_tokens=" << (c.learner.all_tokens ? "true" : "false") << "\nscenes=" << c.scenes
    << "\nsplit=" << c.train_split << ',' << c.valid_split << ',' << c.test_split
    << "\nseed=" << c.seed << "\nchain=" << (c.chain ? "true" : "false")
    << "\nabstain=" << (c.abstain.enabled ? "true" : "false") << "\nradius=" << c.abstain.radius
    << '\n';
  return s.str();
}

// Runs `body`; on failure leaves a marker naming the stage and rethrows
// with the same category.
template <typename F>
void run_stage(const fs::path& out_dir, const std::string& stage, F&& body) {
  auto mark = [&](const std::exception& e) {
    std::ofstream(out_dir / "FAILED") << stage << ": " << e.what() << '\n';
  };
  try {
    body();
  } catch (const ConfigError& e) {
    mark(e);
    throw ConfigError(stage + ": " + e.what());
  } catch (const DataError& e) {
    mark(e);
    throw DataError(stage + ": " + e.what());
  } catch (const std::exception& e) {
    mark(e);
    throw InvariantError(stage + ": " + e.what());
  }
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  const fs::path out_dir(config.out_dir);
  fs::create_directories(out_dir);
  fs::remove(out_dir / "FAILED");
  ExperimentReport report;

  DistributionSpec spec;
  run_stage(out_dir, "setup", [&] {
    spec = config.spec_path.empty() ? default_spec() : load_spec(config.spec_path);
    if (!config.rule_paths.empty()) {
      spec.rules.clear();
      for (const auto& p : config.rule_paths) {
        for (auto& r : load_rules(p)) spec.rules.push_back(std::move(r));
      }
    }
    spec.seed = config.seed;
    spec.validate();
  });
  std::vector<std::string> stages = config.stages;
  if (stages.empty()) {
    if (spec.rules.empty()) throw ConfigError("setup: no stages given and no planted rules");
    stages.push_back(spec.rules.back().rhs_attribute());
  }
  const auto& vocab = *spec.vocab;
  const auto n_train = static_cast<std::size_t>(std::llround(config.train_split * static_cast<double>(config.scenes)));
  const auto n_valid = static_cast<std::size_t>(std::llround(config.valid_split * static_cast<double>(config.scenes)));
  if (n_train == 0 || n_train + n_valid >= config.scenes) {
    throw ConfigError("setup: splits leave an empty train or test set");
  }
  const std::size_t n_test = config.scenes - n_train - n_valid;
  const std::uint64_t valid_first = n_train;
  const std::uint64_t test_first = n_train + n_valid;

  StagePipeline pipeline;
  std::ostringstream timings;
  timings << "stage,target,train_seconds,eval_seconds\n";
  std::ostringstream pipeline_manifest;
  for (std::size_t s = 0; s < stages.size(); ++s) {
    const std::string name = "stage " + std::to_string(s) + " (" + stages[s] + ")";
    run_stage(out_dir, name, [&] {
      const auto targets = role_tokens(vocab, stages[s]);
      const auto train = generate_dataset(spec, targets, n_train, 0, config.threads);
      const auto t0 = std::chrono::steady_clock::now();
      LearnedModel model = train_model(train, config.learner, vocab);
      const auto t1 = std::chrono::steady_clock::now();
      const auto test = generate_dataset(spec, targets, n_test, test_first, config.threads);
      double accuracy = 0;
      if (n_valid > 0) {
        accuracy = evaluate_pooled(model, generate_dataset(spec, targets, n_valid, valid_first,
                                                           config.threads))
                       .accuracy();
      } else {
        accuracy = evaluate_pooled(model, test).accuracy();
      }
      report.stage_accuracies.push_back(accuracy);
      for (std::size_t t = 0; t < targets.size(); ++t) {
        const auto e0 = std::chrono::steady_clock::now();
        const auto metrics = evaluate_model(model.targets[t], test.examples(t));
        const auto e1 = std::chrono::steady_clock::now();
        MetricsRow row{s, vocab.name(targets[t]), metrics, model.targets[t].term_count(),
                       std::chrono::duration<double>(t1 - t0).count(),
                       std::chrono::duration<double>(e1 - e0).count()};
        timings << s << ',' << row.target << ',' << fmt(row.train_seconds) << ','
                << fmt(row.eval_seconds) << '\n';
        report.rows.push_back(std::move(row));
      }
      const std::string model_file = "stage" + std::to_string(s) + "_" + stages[s] + ".model";
      const std::string log_file = "stage" + std::to_string(s) + "_" + stages[s] + ".log.csv";
      std::ostringstream m, l;
      write_model(m, model, vocab);
      write_training_log(l, model, vocab);
      write_file(out_dir / model_file, m.str());
      write_file(out_dir / log_file, l.str());
      report.files.push_back(model_file);
      report.files.push_back(log_file);
      pipeline_manifest << model_file << ' ' << fmt(accuracy) << '\n';
      pipeline.stages.push_back({std::move(model), accuracy, stages[s]});
    });
  }

  if (config.chain) {
    run_stage(out_dir, "chain", [&] {
      auto ce = evaluate_chain(spec, pipeline, stages, test_first, n_test, config.abstain,
                               config.threads);
      std::ostringstream c;
      c << "stages,bound,chained_accuracy,chained_error,coverage,grown_blocks";
      for (std::size_t s = 0; s < stages.size(); ++s) c << ",accuracy_" << s;
      c << '\n' << stages.size() << ',' << fmt(ce.bound) << ',' << fmt(ce.metrics.accuracy()) << ','
        << fmt(ce.metrics.error()) << ',' << fmt(ce.metrics.coverage()) << ',' << ce.grown_blocks;
      for (double a : ce.stage_accuracies) c << ',' << fmt(a);
      c << '\n';
      write_file(out_dir / "chain.csv", c.str());
      report.files.push_back("chain.csv");
      report.chain = std::move(ce);
    });
  }

  run_stage(out_dir, "report", [&] {
    std::ostringstream metrics;
    write_metrics_csv(metrics, report.rows);
    write_file(out_dir / "metrics.csv", metrics.str());
    write_file(out_dir / "timings.csv", timings.str());
    write_file(out_dir / "pipeline.txt", pipeline_manifest.str());
    std::ostringstream spec_text;
    write_spec(spec_text, spec);
    write_file(out_dir / "spec.txt", spec_text.str());
    write_file(out_dir / "config.txt", config_text(config));
    report.files.insert(report.files.begin(), {"metrics.csv", "timings.csv", "pipeline.txt",
                                               "spec.txt", "config.txt"});
    std::ostringstream manifest;
    manifest << "seed " << config.seed << "\nconfig_digest " << file_digest((out_dir / "config.txt").string())
             << "\nsplits " << n_train << ' ' << n_valid << ' ' << n_test << '\n';
    for (const auto& f : report.files) {
      manifest << "file " << f << ' ' << file_digest((out_dir / f).string()) << '\n';
    }
    write_file(out_dir / "manifest.txt", manifest.str());
  });
  return report;
}

}  // namespace uri
