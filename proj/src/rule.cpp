#include "uri/rule.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <optional>
#include <set>
#include <sstream>

#include "uri/error.hpp"

namespace uri {

ConjunctiveExpression::ConjunctiveExpression(std::vector<AtomPattern> atoms,
                                             std::vector<std::string> free_vars,
                                             std::vector<std::string> existential_vars)
    : atoms_(std::move(atoms)),
      free_vars_(std::move(free_vars)),
      existential_vars_(std::move(existential_vars)) {
  if (atoms_.empty()) throw DataError("conjunctive expression needs at least one atom");
  std::set<std::string, std::less<>> declared;
  for (const auto& v : free_vars_) {
    if (!declared.insert(v).second) throw DataError("variable '" + v + "' declared twice");
  }
  for (const auto& v : existential_vars_) {
    if (!declared.insert(v).second) throw DataError("variable '" + v + "' declared twice");
  }
  std::set<std::string, std::less<>> used;
  for (const auto& atom : atoms_) {
    if (atom.vars.empty()) throw DataError("atom '" + atom.attribute + "' has no arguments");
    std::set<std::string, std::less<>> in_atom;
    for (const auto& v : atom.vars) {
      if (!declared.contains(v)) {
        throw DataError("variable '" + v + "' in " + atom.attribute +
                        " is neither free nor existential");
      }
      if (!in_atom.insert(v).second) {
        throw DataError("atom '" + atom.attribute + "' repeats variable '" + v + "'");
      }
      used.insert(v);
    }
    arity_sum_ += atom.arity();
  }
  for (const auto& v : declared) {
    if (!used.contains(v)) throw DataError("variable '" + v + "' occurs in no atom");
  }
}

std::vector<std::string> ConjunctiveExpression::variables() const {
  std::vector<std::string> out(free_vars_.begin(), free_vars_.end());
  out.insert(out.end(), existential_vars_.begin(), existential_vars_.end());
  return out;
}

CoreRule::CoreRule(std::string name, std::vector<ConjunctiveExpression> lhs,
                   std::string rhs_attribute, std::vector<std::string> rhs_vars)
    : name_(std::move(name)),
      lhs_(std::move(lhs)),
      rhs_attribute_(std::move(rhs_attribute)),
      rhs_vars_(std::move(rhs_vars)) {
  if (lhs_.empty()) throw DataError("rule '" + name_ + "' has an empty left-hand side");
  if (rhs_vars_.empty()) throw DataError("rule '" + name_ + "' has an empty right-hand side");
  const std::set<std::string> signature(rhs_vars_.begin(), rhs_vars_.end());
  if (signature.size() != rhs_vars_.size()) {
    throw DataError("rule '" + name_ + "' repeats a right-hand-side variable");
  }
  for (const auto& expr : lhs_) {
    const std::set<std::string> free(expr.free_vars().begin(), expr.free_vars().end());
    if (free != signature) {
      throw DataError("rule '" + name_ + "': disjunct '" + to_string(expr) +
                      "' does not match the right-hand-side variables");
    }
  }
}

int CoreRule::max_arity_sum() const {
  int k = 0;
  for (const auto& e : lhs_) k = std::max(k, e.arity_sum());
  return k;
}

void CoreRule::validate(const AugmentedVocabulary& vocab) const {
  auto check = [&](const std::string& name, int arity) {
    const Attribute* a = vocab.attribute(name);
    if (a == nullptr) {
      throw DataError("rule '" + name_ + "' uses unknown attribute '" + name + "'");
    }
    if (a->arity != arity) {
      throw DataError("rule '" + name_ + "' uses '" + name + "' with arity " +
                      std::to_string(arity) + ", declared " + std::to_string(a->arity));
    }
  };
  check(rhs_attribute_, rhs_arity());
  for (const auto& e : lhs_) {
    for (const auto& atom : e.atoms()) check(atom.attribute, atom.arity());
  }
}

namespace {

// Backtracking matcher: assigns distinct entities to the expression's
// variables so that every atom is present in the scene.
class Matcher {
 public:
  Matcher(const Scene& scene, const ConjunctiveExpression& expr)
      : scene_(scene), expr_(expr), vars_(expr.variables()) {
    for (const auto& atom : expr.atoms()) {
      std::vector<std::size_t> idx;
      for (const auto& v : atom.vars) {
        idx.push_back(static_cast<std::size_t>(
            std::find(vars_.begin(), vars_.end(), v) - vars_.begin()));
      }
      atom_vars_.push_back(std::move(idx));
    }
    assignment_.assign(vars_.size(), std::nullopt);
    used_.assign(scene.entities().size(), false);
  }

  std::size_t var_index(std::string_view name) const {
    return static_cast<std::size_t>(std::find(vars_.begin(), vars_.end(), name) - vars_.begin());
  }

  void bind(std::size_t var, EntityId e) {
    assignment_[var] = e;
    used_[e] = true;
  }

  // Calls `on_match(assignment)` for each full match; stops when it returns true.
  template <typename F>
  bool search(F&& on_match) {
    return step(0, on_match);
  }

 private:
  template <typename F>
  bool step(std::size_t atom_index, F& on_match) {
    if (atom_index == atom_vars_.size()) return on_match(assignment_);
    const AtomPattern& pattern = expr_.atoms()[atom_index];
    const auto& idx = atom_vars_[atom_index];
    for (const GroundAtom& ground : scene_.atoms_of(pattern.attribute)) {
      if (ground.args.size() != idx.size()) continue;
      std::vector<std::size_t> newly;
      bool ok = true;
      for (std::size_t p = 0; p < idx.size() && ok; ++p) {
        const EntityId e = ground.args[p];
        if (assignment_[idx[p]]) {
          ok = *assignment_[idx[p]] == e;
        } else if (used_[e]) {
          ok = false;
        } else {
          bind(idx[p], e);
          newly.push_back(idx[p]);
        }
      }
      if (ok && step(atom_index + 1, on_match)) return true;
      for (std::size_t v : newly) {
        used_[*assignment_[v]] = false;
        assignment_[v].reset();
      }
    }
    return false;
  }

  const Scene& scene_;
  const ConjunctiveExpression& expr_;
  std::vector<std::string> vars_;
  std::vector<std::vector<std::size_t>> atom_vars_;
  std::vector<std::optional<EntityId>> assignment_;
  std::vector<bool> used_;
};

}  // namespace

bool eval_conjunctive(const Scene& scene, const ConjunctiveExpression& expr,
                      const Binding& binding) {
  for (const auto& v : expr.free_vars()) {
    if (!binding.contains(v)) throw DataError("binding is missing free variable '" + v + "'");
  }
  if (binding.size() != expr.free_vars().size()) {
    throw DataError("binding has variables that are not free in the expression");
  }
  Matcher matcher(scene, expr);
  std::set<EntityId> seen;
  for (const auto& [var, entity] : binding) {
    if (entity >= scene.entities().size()) {
      throw DataError("binding of '" + var + "' names an unknown entity");
    }
    if (!seen.insert(entity).second) return false;  // distinct variables, distinct objects
    matcher.bind(matcher.var_index(var), entity);
  }
  return matcher.search([](const auto&) { return true; });
}

std::vector<GroundAtom> apply_rule(const Scene& scene, const CoreRule& rule) {
  std::set<GroundAtom> out;
  for (const auto& expr : rule.lhs()) {
    Matcher matcher(scene, expr);
    std::vector<std::size_t> rhs_index;
    for (const auto& v : rule.rhs_vars()) rhs_index.push_back(matcher.var_index(v));
    matcher.search([&](const std::vector<std::optional<EntityId>>& assignment) {
      GroundAtom atom{rule.rhs_attribute(), {}};
      for (std::size_t i : rhs_index) atom.args.push_back(*assignment[i]);
      out.insert(std::move(atom));
      return false;
    });
  }
  return {out.begin(), out.end()};
}

CoreRule compose_rules(const CoreRule& outer, const CoreRule& inner) {
  std::vector<ConjunctiveExpression> lhs;
  bool rewrote = false;
  for (const auto& od : outer.lhs()) {
    std::vector<std::size_t> hits;
    for (std::size_t i = 0; i < od.atoms().size(); ++i) {
      if (od.atoms()[i].attribute == inner.rhs_attribute()) hits.push_back(i);
    }
    if (hits.empty()) {
      lhs.push_back(od);
      continue;
    }
    if (hits.size() > 1) {
      throw DataError("cannot compose: '" + inner.rhs_attribute() + "' occurs more than once in '" +
                      to_string(od) + "'");
    }
    const AtomPattern& target = od.atoms()[hits.front()];
    if (target.arity() != inner.rhs_arity()) {
      throw DataError("cannot compose: arity of '" + inner.rhs_attribute() + "' differs");
    }
    rewrote = true;
    const auto outer_vars = od.variables();
    for (const auto& id : inner.lhs()) {
      std::map<std::string, std::string> rename;
      for (int p = 0; p < inner.rhs_arity(); ++p) {
        rename[inner.rhs_vars()[static_cast<std::size_t>(p)]] =
            target.vars[static_cast<std::size_t>(p)];
      }
      std::set<std::string> taken(outer_vars.begin(), outer_vars.end());
      std::vector<std::string> existentials(od.existential_vars().begin(),
                                            od.existential_vars().end());
      for (const auto& v : id.existential_vars()) {
        std::string fresh = v;
        for (int n = 1; taken.contains(fresh); ++n) fresh = v + std::to_string(n);
        taken.insert(fresh);
        rename[v] = fresh;
        existentials.push_back(fresh);
      }
      std::vector<AtomPattern> atoms;
      for (std::size_t i = 0; i < od.atoms().size(); ++i) {
        if (i != hits.front()) {
          atoms.push_back(od.atoms()[i]);
          continue;
        }
        for (const auto& a : id.atoms()) {
          AtomPattern renamed{a.attribute, {}};
          for (const auto& v : a.vars) renamed.vars.push_back(rename.at(v));
          atoms.push_back(std::move(renamed));
        }
      }
      lhs.emplace_back(std::move(atoms),
                       std::vector<std::string>(od.free_vars().begin(), od.free_vars().end()),
                       std::move(existentials));
    }
  }
  if (!rewrote) {
    throw DataError("cannot compose: '" + inner.rhs_attribute() + "' does not occur in rule '" +
                    outer.name() + "'");
  }
  return CoreRule(outer.name() + "." + inner.name(), std::move(lhs), outer.rhs_attribute(),
                  std::vector<std::string>(outer.rhs_vars().begin(), outer.rhs_vars().end()));
}

ConjunctiveExpression schema_expression(int schema, std::string_view b, std::string_view c) {
  const std::string B(b);
  const std::string C(c);
  switch (schema) {
    case 1:
      return {{{B, {"x"}}}, {"x"}, {}};
    case 2:
      return {{{B, {"x", "y"}}}, {"x"}, {"y"}};
    case 3:
      return {{{B, {"x", "y"}}, {C, {"y"}}}, {"x"}, {"y"}};
    case 4:
      return {{{B, {"x", "y"}}, {C, {"x", "y"}}}, {"x"}, {"y"}};
    case 5:
      return {{{B, {"x", "y"}}, {C, {"x", "z"}}}, {"x"}, {"y", "z"}};
    case 6:
      return {{{B, {"x", "y"}}, {C, {"x", "z"}}}, {"y", "z"}, {"x"}};
    default:
      throw DataError("schema index must be in 1..6, got " + std::to_string(schema));
  }
}

// ---------------------------------------------------------------------------
// Rule text

namespace {

class RuleLexer {
 public:
  explicit RuleLexer(std::string_view text) : text_(text) {}

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool at_end() {
    skip_space();
    return pos_ >= text_.size();
  }
  bool accept(std::string_view lit) {
    skip_space();
    if (text_.substr(pos_, lit.size()) == lit) {
      pos_ += lit.size();
      return true;
    }
    return false;
  }
  void expect(std::string_view lit) {
    if (!accept(lit)) fail("expected '" + std::string(lit) + "'");
  }
  std::string identifier() {
    skip_space();
    const std::size_t start = pos_;
    while (pos_ < text_.size()) {
      const char ch = text_[pos_];
      if (std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '\'' || ch == '-' ||
          ch == '.') {
        // '.' ends an `exists` prefix when followed by whitespace.
        if (ch == '.' && (pos_ + 1 >= text_.size() ||
                          std::isspace(static_cast<unsigned char>(text_[pos_ + 1])))) {
          break;
        }
        ++pos_;
      } else {
        break;
      }
    }
    if (start == pos_) fail("expected an identifier");
    return std::string(text_.substr(start, pos_ - start));
  }
  bool peek_identifier_is(std::string_view word) {
    skip_space();
    const std::size_t save = pos_;
    const bool ok = pos_ < text_.size() &&
                    std::isalpha(static_cast<unsigned char>(text_[pos_])) && identifier() == word;
    pos_ = save;
    return ok;
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw DataError("rule text: " + what + " at column " + std::to_string(pos_ + 1) + " in '" +
                    std::string(text_) + "'");
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

AtomPattern parse_atom(RuleLexer& lex) {
  AtomPattern atom{lex.identifier(), {}};
  lex.expect("(");
  do {
    atom.vars.push_back(lex.identifier());
  } while (lex.accept(","));
  lex.expect(")");
  return atom;
}

}  // namespace

CoreRule parse_rule(std::string_view line) {
  RuleLexer lex(line);
  const std::string name = lex.identifier();
  lex.expect(":");
  const AtomPattern rhs = parse_atom(lex);
  lex.expect("~=");
  std::vector<ConjunctiveExpression> lhs;
  do {
    std::optional<std::vector<std::string>> declared;
    if (lex.peek_identifier_is("exists")) {
      lex.identifier();
      declared.emplace();
      while (!lex.accept(".")) declared->push_back(lex.identifier());
    }
    std::vector<AtomPattern> atoms;
    do {
      atoms.push_back(parse_atom(lex));
    } while (lex.accept("&"));
    std::vector<std::string> existentials;
    for (const auto& a : atoms) {
      for (const auto& v : a.vars) {
        const bool is_free = std::find(rhs.vars.begin(), rhs.vars.end(), v) != rhs.vars.end();
        if (!is_free && std::find(existentials.begin(), existentials.end(), v) == existentials.end()) {
          existentials.push_back(v);
        }
      }
    }
    if (declared) {
      const std::set<std::string> a(declared->begin(), declared->end());
      const std::set<std::string> b(existentials.begin(), existentials.end());
      if (a != b) lex.fail("declared existentials do not match the non-free variables");
      existentials = *declared;
    }
    lhs.emplace_back(std::move(atoms), rhs.vars, std::move(existentials));
  } while (lex.accept("|"));
  if (!lex.at_end()) lex.fail("unexpected trailing text");
  return CoreRule(name, std::move(lhs), rhs.attribute, rhs.vars);
}

std::vector<CoreRule> read_rules(std::istream& in) {
  std::vector<CoreRule> rules;
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    rules.push_back(parse_rule(line));
  }
  return rules;
}

std::vector<CoreRule> load_rules(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open rule file '" + path + "'");
  return read_rules(in);
}

namespace {
std::string join(std::span<const std::string> items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}
}  // namespace

std::string to_string(const ConjunctiveExpression& expr) {
  std::string out;
  if (!expr.existential_vars().empty()) {
    out += "exists " + join(expr.existential_vars(), " ") + ". ";
  }
  for (std::size_t i = 0; i < expr.atoms().size(); ++i) {
    if (i) out += " & ";
    out += expr.atoms()[i].attribute + "(" + join(expr.atoms()[i].vars, ",") + ")";
  }
  return out;
}

std::string to_string(const CoreRule& rule) {
  std::string out = rule.name() + ": " + rule.rhs_attribute() + "(" + join(rule.rhs_vars(), ",") +
                    ") ~= ";
  for (std::size_t i = 0; i < rule.lhs().size(); ++i) {
    if (i) out += " | ";
    out += to_string(rule.lhs()[i]);
  }
  return out;
}

}  // namespace uri
