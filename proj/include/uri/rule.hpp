#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "uri/scene.hpp"
#include "uri/vocabulary.hpp"

namespace uri {

/// One atom of a conjunctive expression, e.g. Insulted(x, y).
struct AtomPattern {
  std::string attribute;
  std::vector<std::string> vars;

  int arity() const { return static_cast<int>(vars.size()); }
  friend bool operator==(const AtomPattern&, const AtomPattern&) = default;
};

/// Conjunction of atoms with free variables and independently scoped
/// existential variables. Distinct variables denote distinct entities.
class ConjunctiveExpression {
 public:
  ConjunctiveExpression() = default;
  /// Throws DataError if a variable is neither free nor existential, if a
  /// declared variable occurs in no atom, or if an atom repeats a variable.
  ConjunctiveExpression(std::vector<AtomPattern> atoms, std::vector<std::string> free_vars,
                        std::vector<std::string> existential_vars);

  std::span<const AtomPattern> atoms() const { return atoms_; }
  std::span<const std::string> free_vars() const { return free_vars_; }
  std::span<const std::string> existential_vars() const { return existential_vars_; }
  /// Free variables followed by existentials.
  std::vector<std::string> variables() const;
  /// Sum of arities over atom occurrences: the k of the matching k-DNF.
  int arity_sum() const { return arity_sum_; }

  friend bool operator==(const ConjunctiveExpression&, const ConjunctiveExpression&) = default;

 private:
  std::vector<AtomPattern> atoms_;
  std::vector<std::string> free_vars_;
  std::vector<std::string> existential_vars_;
  int arity_sum_ = 0;
};

/// Disjunction of conjunctive expressions approximately equivalent to
/// rhs(rhs_vars...).
class CoreRule {
 public:
  CoreRule() = default;
  CoreRule(std::string name, std::vector<ConjunctiveExpression> lhs, std::string rhs_attribute,
           std::vector<std::string> rhs_vars);

  const std::string& name() const { return name_; }
  std::span<const ConjunctiveExpression> lhs() const { return lhs_; }
  const std::string& rhs_attribute() const { return rhs_attribute_; }
  std::span<const std::string> rhs_vars() const { return rhs_vars_; }
  int rhs_arity() const { return static_cast<int>(rhs_vars_.size()); }
  int max_arity_sum() const;

  /// Every attribute used must exist in `vocab` with the arity used here.
  void validate(const AugmentedVocabulary& vocab) const;

  friend bool operator==(const CoreRule&, const CoreRule&) = default;

 private:
  std::string name_;
  std::vector<ConjunctiveExpression> lhs_;
  std::string rhs_attribute_;
  std::vector<std::string> rhs_vars_;
};

using Binding = std::map<std::string, EntityId, std::less<>>;

/// True iff distinct entities, distinct from the bound ones, can be assigned
/// to the existentials so that every atom is in the scene.
bool eval_conjunctive(const Scene& scene, const ConjunctiveExpression& expr,
                      const Binding& binding);

/// rhs atoms for every binding under which some disjunct holds; sorted, unique.
std::vector<GroundAtom> apply_rule(const Scene& scene, const CoreRule& rule);

/// Substitutes inner's lhs for the single inner.rhs atom of each outer
/// disjunct that mentions it, distributing over inner's disjunction.
CoreRule compose_rules(const CoreRule& outer, const CoreRule& inner);

/// Template expressions 1..6 instantiated with attributes `b` and `c`.
/// Templates 1 and 2 ignore `c`.
ConjunctiveExpression schema_expression(int schema, std::string_view b, std::string_view c = {});

// Rule text: `name: Rhs(x,z) ~= exists y. A(x,y) & B(z,y) | C(x,z)`.
// The `exists` prefix is optional; undeclared non-rhs variables are existential.
CoreRule parse_rule(std::string_view line);
std::vector<CoreRule> read_rules(std::istream& in);
std::vector<CoreRule> load_rules(const std::string& path);
std::string to_string(const ConjunctiveExpression& expr);
std::string to_string(const CoreRule& rule);

}  // namespace uri
