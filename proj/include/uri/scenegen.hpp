#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "uri/codec.hpp"
#include "uri/learner.hpp"
#include "uri/rule.hpp"

namespace uri {

/// Seeded distribution over scenes with planted rules.
struct DistributionSpec {
  VocabularyPtr vocab;
  /// Planted rules, applied in order; later rules may use earlier rhs attributes.
  std::vector<CoreRule> rules;
  std::size_t blocks = 8;
  int max_offset = 3;
  std::size_t entities_min = 4;
  std::size_t entities_max = 6;
  /// Per-attribute probability of a base atom; unlisted attributes use default_density.
  std::map<std::string, double, std::less<>> densities;
  double default_density = 0.4;
  /// Probability that a scene gets an instance of each planted rule's lhs.
  double plant_rate = 0.7;
  /// Probability of one extra atom for each attribute already present.
  double rho = 0.0;
  /// Per-label flip probability in generate_dataset.
  double eta = 0.0;
  std::uint64_t seed = 1;
  /// Block size for sequence output; 0 sizes it to the data.
  std::size_t h = 0;

  double density(std::string_view attribute) const;
  /// Attributes produced by planted rules.
  std::vector<std::string> derived_attributes() const;
  /// Throws ConfigError for inconsistent settings.
  void validate() const;
};

/// Default vocabulary: eight names, four filler words, Insulted/Likes/
/// Revenges/DoesBadTo relations and Tall.
VocabularyPtr default_vocabulary();
/// `Revenges(z,x) ~= exists y. Insulted(x,y) & Likes(z,y)` over the default vocabulary.
CoreRule revenge_rule();
DistributionSpec default_spec();

/// Deterministic in (spec.seed, draw_index).
Scene sample_scene(const DistributionSpec& spec, std::uint64_t draw_index);
std::vector<Scene> sample_scenes(const DistributionSpec& spec, std::size_t n,
                                 std::uint64_t first_index = 0, std::size_t threads = 1);

/// Attributes hidden from the features when learning `attribute`: itself and
/// every attribute derived at or after the rule producing it.
std::vector<std::string> hidden_attributes(const DistributionSpec& spec,
                                           std::string_view attribute);

/// labels[b] iff block b holds argument `role` of some `attribute` atom.
std::vector<bool> role_labels(const Scene& scene, std::string_view attribute, int role);

/// One instance per (scene, block); features omit the hidden attributes of
/// every target. Targets must be role tokens.
LabeledDataset generate_dataset(const DistributionSpec& spec, std::span<const TokenId> targets,
                                std::size_t n, std::uint64_t first_index = 0,
                                std::size_t threads = 1);

/// Bob Joe Sue Joan Bill in blocks 0..4 with Insulted(Bob,Joe), Likes(Sue,Joe),
/// Likes(Joan,Bill), Revenges(Sue,Bob).
Scene craft_confusion_case();

// Spec file: `key=value` lines, `#` comments. Keys: N, M, h, entities (a-b),
// density.<Attr>, density, plant_rate, rho, eta, seed, vocab (path), rules
// (path), plant (comma-separated rule names). Paths are relative to the file.
DistributionSpec read_spec(std::istream& in, const std::string& base_dir = ".");
DistributionSpec load_spec(const std::string& path);
void write_spec(std::ostream& out, const DistributionSpec& spec);

}  // namespace uri
