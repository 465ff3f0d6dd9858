#pragma once

#include <compare>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "uri/codec.hpp"
#include "uri/rule.hpp"
#include "uri/vocabulary.hpp"

namespace uri {

enum class Frame { absolute, relative };

/// [block `block` carries `token`]; `block` is a position in the absolute
/// frame and an offset from the target block in the relative frame.
struct FeatureLiteral {
  int block = 0;
  TokenId token;

  friend auto operator<=>(const FeatureLiteral&, const FeatureLiteral&) = default;
};

/// Conjunction of literals, kept sorted and duplicate-free.
using Term = std::vector<FeatureLiteral>;

void canonicalize(Term& term);

struct KDnfFormula {
  TokenId target;
  int k = 0;
  Frame frame = Frame::relative;
  std::vector<Term> terms;

  /// Sorts and deduplicates terms (and their literals).
  void canonicalize();
  friend bool operator==(const KDnfFormula&, const KDnfFormula&) = default;
};

/// One term per injective placement of the disjunct's variables on blocks
/// [0, N), with the target variable pinned to `target_position`.
KDnfFormula compile_rule_absolute(const CoreRule& rule, const AugmentedVocabulary& vocab,
                                  std::size_t blocks, std::size_t target_position,
                                  int target_role);

/// As above with non-target variables placed at distinct nonzero offsets in
/// [-max_offset, max_offset] from the target block.
KDnfFormula compile_rule_relative(const CoreRule& rule, const AugmentedVocabulary& vocab,
                                  int max_offset, int target_role);

bool term_fires(const Term& term, Frame frame, const BlockPresenceFeatures& features,
                std::size_t target_block);

/// Index of the first firing term, if any. Throws DataError for tokens
/// outside the feature grid.
std::optional<std::size_t> first_firing_term(const KDnfFormula& formula,
                                             const BlockPresenceFeatures& features,
                                             std::size_t target_block);

inline bool eval_dnf(const KDnfFormula& formula, const BlockPresenceFeatures& features,
                     std::size_t target_block) {
  return first_firing_term(formula, features, target_block).has_value();
}

// Formula file: `target <token> k <k> frame <abs|rel>`, then one term per
// line as space-separated `(<offset-or-pos>,<token>)` pairs.
std::string format_term(const Term& term, const AugmentedVocabulary& vocab);
Term parse_term(std::string_view text, const AugmentedVocabulary& vocab);
void write_formula(std::ostream& out, const KDnfFormula& formula, const AugmentedVocabulary& vocab);
std::vector<KDnfFormula> read_formulas(std::istream& in, const AugmentedVocabulary& vocab);

}  // namespace uri
