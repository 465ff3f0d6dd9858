// Command-line driver: data generation, encoding, training, evaluation,
// chaining and the cost model.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "uri/chainer.hpp"
#include "uri/codec.hpp"
#include "uri/compiler.hpp"
#include "uri/error.hpp"
#include "uri/experiments.hpp"
#include "uri/learner.hpp"
#include "uri/rule.hpp"
#include "uri/scenegen.hpp"
#include "uri/text_frontend.hpp"

namespace fs = std::filesystem;
using namespace uri;

namespace {

// Relative output paths land in $URI_OUT_DIR when it is set.
std::string output_path(const std::string& path) {
  const char* dir = std::getenv("URI_OUT_DIR");
  if (!dir || !*dir || fs::path(path).is_absolute()) return path;
  fs::create_directories(dir);
  return (fs::path(dir) / path).string();
}

// Writes via `fn` to the file, or to stdout when `path` is empty.
template <typename Fn>
void emit(const std::string& path, Fn&& fn) {
  if (path.empty()) {
    fn(std::cout);
    return;
  }
  const auto target = output_path(path);
  std::ofstream out(target, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + target + "'");
  fn(out);
}

std::ifstream open_input(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw ConfigError(std::string("cannot open ") + what + " '" + path + "'");
  return in;
}

VocabularyPtr vocabulary_from(const std::string& vocab_path, const std::string& spec_path) {
  if (!vocab_path.empty()) {
    return std::make_shared<const AugmentedVocabulary>(load_vocabulary(vocab_path));
  }
  if (!spec_path.empty()) return load_spec(spec_path).vocab;
  return default_vocabulary();
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream f(s);
  std::string item;
  while (std::getline(f, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<TokenId> parse_targets(const AugmentedVocabulary& vocab, const std::string& list) {
  std::vector<TokenId> out;
  for (const auto& name : split_commas(list)) {
    if (vocab.attribute(name)) {
      for (TokenId t : role_tokens(vocab, name)) out.push_back(t);
    } else {
      out.push_back(vocab.token(name));
    }
  }
  if (out.empty()) throw ConfigError("no targets given");
  return out;
}

std::size_t block_size_for(const std::vector<Scene>& scenes, std::size_t h) {
  if (h) return h;
  std::size_t need = 2;
  for (const auto& s : scenes) need = std::max(need, required_block_size(s));
  return need;
}

// Copy with every block padded to the widest one, so the result is well formed.
IntegracodedSequence repad(const IntegracodedSequence& seq) {
  std::size_t h = seq.h();
  for (const auto& b : seq.blocks()) h = std::max(h, b.slots.size() + 1);
  IntegracodedSequence out(seq.vocab_ptr(), h);
  for (std::size_t i = 0; i < seq.size(); ++i) {
    out.append_block(seq.block(i).head);
    out.set_slots(i, seq.block(i).slots);
  }
  return out;
}

struct Common {
  std::size_t threads = 1;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unary relational integracode toolkit"};
  app.require_subcommand(1);
  app.allow_windows_style_options(false);
  Common common;
  app.add_option("--threads", common.threads, "Worker threads (0 = all cores)");

  // gen
  auto* gen = app.add_subcommand("gen", "Sample a scene dataset from a distribution spec");
  std::string gen_spec, gen_out;
  std::size_t gen_n = 100;
  std::uint64_t gen_first = 0;
  std::optional<std::uint64_t> gen_seed;
  gen->add_option("--spec", gen_spec, "Spec file (default: built-in)");
  gen->add_option("--n", gen_n, "Number of scenes")->check(CLI::PositiveNumber);
  gen->add_option("--first", gen_first, "First draw index");
  gen->add_option("--seed", gen_seed, "Override the distribution seed");
  gen->add_option("--out", gen_out, "Scene dataset file (default: stdout)");

  // encode
  auto* enc = app.add_subcommand("encode", "Encode a scene dataset as integracode sequences");
  std::string enc_vocab, enc_spec, enc_scenes, enc_out;
  std::size_t enc_h = 0;
  enc->add_option("--vocab", enc_vocab, "Vocabulary file");
  enc->add_option("--spec", enc_spec, "Take the vocabulary from a spec file");
  enc->add_option("--scenes", enc_scenes, "Scene dataset file")->required();
  enc->add_option("--block-size", enc_h, "Block size (0 = smallest that fits)");
  enc->add_option("--out", enc_out, "Sequence file (default: stdout)");

  // parse
  auto* parse = app.add_subcommand("parse", "Parse controlled-language text into a sequence");
  std::string parse_lexicon, parse_text, parse_out, parse_scene_out;
  std::size_t parse_h = 0;
  int parse_near = 0;
  parse->add_option("--lexicon", parse_lexicon, "Lexicon file")->required();
  parse->add_option("--text", parse_text, "Text file")->required();
  parse->add_option("--block-size", parse_h, "Block size (0 = smallest that fits)");
  parse->add_option("--near", parse_near, "Add Near/Noun/Verb tokens with this threshold");
  parse->add_option("--out", parse_out, "Sequence file (default: stdout)");
  parse->add_option("--scene-out", parse_scene_out, "Also write the scene record here");

  // compile-rule
  auto* comp = app.add_subcommand("compile-rule", "Compile a rule into its k-DNF formula");
  std::string comp_vocab, comp_rules, comp_rule, comp_frame = "rel", comp_out;
  std::size_t comp_blocks = 8, comp_position = 0;
  int comp_role = 1, comp_offset = 3;
  comp->add_option("--vocab", comp_vocab, "Vocabulary file (default: built-in)");
  comp->add_option("--rules", comp_rules, "Rule file")->required();
  comp->add_option("--rule", comp_rule, "Rule name (default: first)");
  comp->add_option("--frame", comp_frame, "abs or rel")->check(CLI::IsMember({"abs", "rel"}));
  comp->add_option("--blocks", comp_blocks, "Window length for the absolute frame");
  comp->add_option("--position", comp_position, "Target block for the absolute frame");
  comp->add_option("--role", comp_role, "Target role (1-based)");
  comp->add_option("--max-offset", comp_offset, "Offset bound M for the relative frame");
  comp->add_option("--out", comp_out, "Formula file (default: stdout)");

  // train
  auto* train = app.add_subcommand("train", "Learn target formulas from generated data");
  std::string train_spec, train_targets, train_out, train_log;
  std::size_t train_n = 2000;
  std::optional<std::uint64_t> train_seed;
  LearnerConfig learner;
  train->add_option("--spec", train_spec, "Spec file (default: built-in)");
  train->add_option("--targets", train_targets,
                    "Comma-separated role tokens or attributes (default: last planted rule)");
  train->add_option("--n", train_n, "Training scenes")->check(CLI::PositiveNumber);
  train->add_option("--seed", train_seed, "Override the distribution seed");
  train->add_option("--learner", learner.kind, "elimination or winnow")
      ->check(CLI::IsMember({"elimination", "winnow"}));
  int k = 4, max_offset = 3;
  train->add_option("--k", k, "Term size bound");
  train->add_option("--max-offset", max_offset, "Offset bound M");
  train->add_option("--alpha", learner.winnow.alpha, "Winnow promotion factor");
  train->add_option("--theta", learner.winnow.threshold, "Winnow threshold (0 = pool size)");
  train->add_option("--passes", learner.winnow.passes, "Winnow passes");
  train->add_option("--budget", learner.elimination.negative_budget,
                    "Negatives a term may fire on");
  train->add_flag("--all-tokens", learner.all_tokens, "Use entity and word tokens as features");
  train->add_option("--out", train_out, "Model file (default: stdout)");
  train->add_option("--log", train_log, "Training log CSV");
  double bound_eps = 0.05, bound_delta = 0.05;
  train->add_option("--epsilon", bound_eps, "Error level for the advisory sample bound");
  train->add_option("--delta", bound_delta, "Confidence level for the advisory sample bound");

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a model on fresh generated data");
  std::string eval_spec, eval_model, eval_out;
  std::size_t eval_n = 1000;
  std::uint64_t eval_first = 1'000'000;
  std::optional<std::uint64_t> eval_seed;
  bool eval_abstain = false;
  int eval_radius = 3;
  eval->add_option("--spec", eval_spec, "Spec file (default: built-in)");
  eval->add_option("--model", eval_model, "Model file")->required();
  eval->add_option("--n", eval_n, "Evaluation scenes")->check(CLI::PositiveNumber);
  eval->add_option("--first", eval_first, "First draw index");
  eval->add_option("--seed", eval_seed, "Override the distribution seed");
  eval->add_flag("--abstain", eval_abstain, "Abstain near repeated relations");
  eval->add_option("--radius", eval_radius, "Repeat-detection radius");
  eval->add_option("--out", eval_out, "Metrics CSV (default: stdout)");

  // infer
  auto* infer = app.add_subcommand("infer", "Run one classifier call over sequences");
  std::string infer_vocab, infer_spec, infer_model, infer_seqs, infer_out;
  AbstentionPolicy infer_abstain;
  infer->add_option("--vocab", infer_vocab, "Vocabulary file");
  infer->add_option("--spec", infer_spec, "Take the vocabulary from a spec file");
  infer->add_option("--model", infer_model, "Model file")->required();
  infer->add_option("--sequences", infer_seqs, "Sequence file")->required();
  infer->add_flag("--abstain", infer_abstain.enabled, "Abstain near repeated relations");
  infer->add_option("--radius", infer_abstain.radius, "Repeat-detection radius");
  infer->add_option("--out", infer_out, "Sequence file (default: stdout)");

  // chain
  auto* chn = app.add_subcommand("chain", "Chain model stages over sequences");
  std::string chain_vocab, chain_spec, chain_pipeline, chain_seqs, chain_out, chain_trace;
  AbstentionPolicy chain_abstain;
  chn->add_option("--vocab", chain_vocab, "Vocabulary file");
  chn->add_option("--spec", chain_spec, "Take the vocabulary from a spec file");
  chn->add_option("--pipeline", chain_pipeline, "Pipeline manifest")->required();
  chn->add_option("--sequences", chain_seqs, "Sequence file")->required();
  chn->add_flag("--abstain", chain_abstain.enabled, "Abstain near repeated relations");
  chn->add_option("--radius", chain_abstain.radius, "Repeat-detection radius");
  chn->add_option("--out", chain_out, "Sequence file (default: stdout)");
  chn->add_option("--trace", chain_trace, "Trace file");

  // cost-model
  auto* cost = app.add_subcommand("cost-model", "Print the analytic cost comparison");
  CostModelParams cost_params;
  std::string cost_out;
  cost->add_option("--d", cost_params.d, "Embedding dimension");
  cost->add_option("--N", cost_params.N, "Window length");
  cost->add_option("--block-size", cost_params.h, "Block size");
  cost->add_option("--g-prime", cost_params.g_prime, "Embedding expansion factor");
  cost->add_option("--r", cost_params.r, "Relation arity");
  cost->add_option("--out", cost_out, "CSV file (default: stdout)");

  // oracle-suite
  auto* prop = app.add_subcommand("oracle-suite", "Compiled formulas against the rule oracle");
  OracleSuiteOptions prop_opts;
  std::string prop_out;
  prop->add_option("--rules", prop_opts.rules, "Random rules");
  prop->add_option("--scenes", prop_opts.scenes_per_rule, "Scenes per rule");
  prop->add_option("--max-blocks", prop_opts.max_blocks, "Largest window");
  prop->add_option("--seed", prop_opts.seed, "Seed");
  prop->add_option("--out", prop_out, "CSV file (default: stdout)");

  // run
  auto* run = app.add_subcommand("run", "Run an experiment config end to end");
  std::string run_config;
  run->add_option("--config", run_config, "Experiment config")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen) {
      DistributionSpec spec = gen_spec.empty() ? default_spec() : load_spec(gen_spec);
      if (gen_seed) spec.seed = *gen_seed;
      const auto scenes = sample_scenes(spec, gen_n, gen_first, common.threads);
      emit(gen_out, [&](std::ostream& out) {
        for (const auto& s : scenes) write_scene(out, s);
      });
    } else if (*enc) {
      const auto vocab = vocabulary_from(enc_vocab, enc_spec);
      const auto scenes = load_scene_dataset(enc_scenes);
      const std::size_t h = block_size_for(scenes, enc_h);
      emit(enc_out, [&](std::ostream& out) {
        for (std::size_t i = 0; i < scenes.size(); ++i) {
          if (i) out << '\n';
          write_sequence(out, encode_scene(scenes[i], h, vocab));
        }
      });
    } else if (*parse) {
      const Lexicon lexicon = load_lexicon(parse_lexicon);
      auto in = open_input(parse_text, "text file");
      std::stringstream text;
      text << in.rdbuf();
      const auto parsed = parse_controlled_text(text.str(), lexicon);
      auto vocab = std::make_shared<const AugmentedVocabulary>(
          lexicon_vocabulary(lexicon, parse_near > 0));
      std::size_t h = block_size_for({parsed.scene}, parse_h);
      auto seq = encode_scene(parsed.scene, h, vocab);
      if (parse_near > 0) seq = repad(augment_linguistic(seq, parse_near, lexicon));
      for (auto m : parsed.coreference.unresolved) {
        std::cerr << "warning: pronoun '" << parsed.mentions[m].word << "' at block "
                  << parsed.mentions[m].position << " has no antecedent\n";
      }
      emit(parse_out, [&](std::ostream& out) { write_sequence(out, seq); });
      if (!parse_scene_out.empty()) {
        emit(parse_scene_out, [&](std::ostream& out) { write_scene(out, parsed.scene); });
      }
    } else if (*comp) {
      const auto vocab = vocabulary_from(comp_vocab, "");
      const auto rules = load_rules(comp_rules);
      if (rules.empty()) throw DataError("rule file '" + comp_rules + "' holds no rules");
      const CoreRule* rule = &rules.front();
      if (!comp_rule.empty()) {
        rule = nullptr;
        for (const auto& r : rules) {
          if (r.name() == comp_rule) rule = &r;
        }
        if (!rule) throw ConfigError("no rule named '" + comp_rule + "'");
      }
      rule->validate(*vocab);
      const auto formula =
          comp_frame == "abs"
              ? compile_rule_absolute(*rule, *vocab, comp_blocks, comp_position, comp_role)
              : compile_rule_relative(*rule, *vocab, comp_offset, comp_role);
      emit(comp_out, [&](std::ostream& out) { write_formula(out, formula, *vocab); });
    } else if (*train) {
      DistributionSpec spec = train_spec.empty() ? default_spec() : load_spec(train_spec);
      if (train_seed) spec.seed = *train_seed;
      const auto& vocab = *spec.vocab;
      std::vector<TokenId> targets;
      if (train_targets.empty()) {
        if (spec.rules.empty()) throw ConfigError("no --targets and no planted rules");
        targets = role_tokens(vocab, spec.rules.back().rhs_attribute());
      } else {
        targets = parse_targets(vocab, train_targets);
      }
      learner.elimination.k = learner.winnow.k = k;
      learner.elimination.max_offset = learner.winnow.max_offset = max_offset;
      const auto data = generate_dataset(spec, targets, train_n, 0, common.threads);
      for (const auto& w : data.warnings) std::cerr << "warning: " << w << '\n';
      const auto model = train_model(data, learner, vocab);
      emit(train_out, [&](std::ostream& out) { write_model(out, model, vocab); });
      if (!train_log.empty()) {
        emit(train_log, [&](std::ostream& out) { write_training_log(out, model, vocab); });
      }
      for (const auto& t : model.targets) {
        std::cerr << vocab.name(t.target) << ": " << t.stats.examples << " examples, "
                  << t.stats.positives << " positive, " << t.stats.candidates
                  << " candidate terms, " << t.term_count() << " in model, "
                  << t.stats.uncovered_positives << " uncovered; advisory sample bound "
                  << consistent_sample_bound(t.stats.candidates, bound_eps, bound_delta)
                  << " at eps=" << bound_eps << " delta=" << bound_delta << '\n';
      }
    } else if (*eval) {
      DistributionSpec spec = eval_spec.empty() ? default_spec() : load_spec(eval_spec);
      if (eval_seed) spec.seed = *eval_seed;
      const auto& vocab = *spec.vocab;
      const auto model = load_model(eval_model, vocab);
      std::vector<TokenId> targets;
      for (const auto& t : model.targets) targets.push_back(t.target);
      const auto data = generate_dataset(spec, targets, eval_n, eval_first, common.threads);
      AbstainPredicate abstain;
      if (eval_abstain) {
        abstain = [&](const LabeledExample& e) {
          const auto flagged = detect_repeated_relations(*e.features, vocab, eval_radius);
          return std::binary_search(flagged.begin(), flagged.end(), e.target_block);
        };
      }
      std::vector<MetricsRow> rows;
      for (std::size_t t = 0; t < targets.size(); ++t) {
        rows.push_back({0, vocab.name(targets[t]),
                        evaluate_model(model.targets[t], data.examples(t), abstain),
                        model.targets[t].term_count(), 0, 0});
      }
      emit(eval_out, [&](std::ostream& out) { write_metrics_csv(out, rows); });
    } else if (*infer) {
      const auto vocab = vocabulary_from(infer_vocab, infer_spec);
      const auto model = load_model(infer_model, *vocab);
      auto in = open_input(infer_seqs, "sequence file");
      const auto seqs = read_sequences(in, vocab);
      std::size_t grown = 0;
      emit(infer_out, [&](std::ostream& out) {
        for (std::size_t i = 0; i < seqs.size(); ++i) {
          const auto r = classify_call(seqs[i], model, infer_abstain);
          grown += r.grown_blocks;
          if (i) out << '\n';
          write_sequence(out, r.sequence);
        }
      });
      if (grown) std::cerr << "warning: " << grown << " blocks grew past h\n";
    } else if (*chn) {
      const auto vocab = vocabulary_from(chain_vocab, chain_spec);
      const auto pipeline = load_pipeline(chain_pipeline, *vocab);
      auto in = open_input(chain_seqs, "sequence file");
      const auto seqs = read_sequences(in, vocab);
      std::vector<ChainResult> results;
      for (const auto& s : seqs) results.push_back(chain(s, pipeline, chain_abstain));
      emit(chain_out, [&](std::ostream& out) {
        for (std::size_t i = 0; i < results.size(); ++i) {
          if (i) out << '\n';
          write_sequence(out, results[i].sequence);
        }
      });
      if (!chain_trace.empty()) {
        emit(chain_trace, [&](std::ostream& out) {
          for (std::size_t i = 0; i < results.size(); ++i) {
            out << "# sequence " << i << '\n';
            write_trace(out, results[i].trace, *vocab);
          }
        });
      }
      std::cerr << "soundness bound " << soundness_bound(pipeline.accuracies()) << '\n';
    } else if (*cost) {
      emit(cost_out, [&](std::ostream& out) { write_cost_report(out, cost_model(cost_params)); });
    } else if (*prop) {
      prop_opts.threads = common.threads;
      const auto result = run_oracle_suite(prop_opts);
      emit(prop_out, [&](std::ostream& out) { write_oracle_csv(out, result); });
      for (const auto& d : result.disagreements) std::cerr << "disagreement: " << d << '\n';
      if (result.agreement() != 1.0) return 4;
    } else if (*run) {
      ExperimentConfig config = load_experiment_config(run_config);
      if (const char* dir = std::getenv("URI_OUT_DIR"); dir && *dir && config.out_dir == "out") {
        config.out_dir = dir;
      }
      if (common.threads != 1) config.threads = common.threads;
      const auto report = run_experiment(config);
      std::cout << "wrote " << report.files.size() + 1 << " files to " << config.out_dir << '\n';
      if (report.chain) {
        std::cout << "chained accuracy " << report.chain->metrics.accuracy() << ", bound "
                  << report.chain->bound << '\n';
      }
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const InvariantError& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 4;
  }
  return 0;
}
