#include "uri/compiler.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>

#include "uri/error.hpp"

namespace uri {

void canonicalize(Term& term) {
  std::sort(term.begin(), term.end());
  term.erase(std::unique(term.begin(), term.end()), term.end());
}

void KDnfFormula::canonicalize() {
  for (auto& t : terms) uri::canonicalize(t);
  std::sort(terms.begin(), terms.end());
  terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
}

namespace {

struct DisjunctPlan {
  std::vector<std::string> vars;
  std::size_t target_var = 0;
  // per atom occurrence: (variable index, role token)
  std::vector<std::pair<std::size_t, TokenId>> literals;
};

DisjunctPlan plan_disjunct(const ConjunctiveExpression& expr, const CoreRule& rule,
                           const AugmentedVocabulary& vocab, int target_role) {
  DisjunctPlan plan{expr.variables(), 0, {}};
  const std::string& target = rule.rhs_vars()[static_cast<std::size_t>(target_role - 1)];
  plan.target_var = static_cast<std::size_t>(
      std::find(plan.vars.begin(), plan.vars.end(), target) - plan.vars.begin());
  for (const auto& atom : expr.atoms()) {
    for (std::size_t p = 0; p < atom.vars.size(); ++p) {
      const auto var = static_cast<std::size_t>(
          std::find(plan.vars.begin(), plan.vars.end(), atom.vars[p]) - plan.vars.begin());
      plan.literals.emplace_back(var, vocab.role_token(atom.attribute, static_cast<int>(p + 1)));
    }
  }
  return plan;
}

// Enumerates injective maps of the non-target variables into `choices`,
// emitting one term per map.
void enumerate_terms(const DisjunctPlan& plan, const std::vector<int>& choices, int target_slot,
                     std::vector<Term>& out) {
  std::vector<int> place(plan.vars.size(), 0);
  std::vector<bool> used(choices.size(), false);
  place[plan.target_var] = target_slot;
  auto emit = [&] {
    Term t;
    for (const auto& [var, tok] : plan.literals) t.push_back({place[var], tok});
    canonicalize(t);
    out.push_back(std::move(t));
  };
  auto rec = [&](auto&& self, std::size_t var) -> void {
    if (var == plan.vars.size()) {
      emit();
      return;
    }
    if (var == plan.target_var) {
      self(self, var + 1);
      return;
    }
    for (std::size_t c = 0; c < choices.size(); ++c) {
      if (used[c]) continue;
      used[c] = true;
      place[var] = choices[c];
      self(self, var + 1);
      used[c] = false;
    }
  };
  rec(rec, 0);
}

void check_role(const CoreRule& rule, const AugmentedVocabulary& vocab, int target_role) {
  rule.validate(vocab);
  if (target_role < 1 || target_role > rule.rhs_arity()) {
    throw DataError("target role " + std::to_string(target_role) + " out of range for rule '" +
                    rule.name() + "'");
  }
}

}  // namespace

KDnfFormula compile_rule_absolute(const CoreRule& rule, const AugmentedVocabulary& vocab,
                                  std::size_t blocks, std::size_t target_position,
                                  int target_role) {
  check_role(rule, vocab, target_role);
  if (target_position >= blocks) throw DataError("target position outside the window");
  KDnfFormula f{vocab.role_token(rule.rhs_attribute(), target_role), rule.max_arity_sum(),
                Frame::absolute, {}};
  for (const auto& expr : rule.lhs()) {
    if (expr.variables().size() > blocks) {
      throw DataError("window of " + std::to_string(blocks) + " blocks is smaller than the " +
                      std::to_string(expr.variables().size()) + " variables of rule '" +
                      rule.name() + "'");
    }
    const auto plan = plan_disjunct(expr, rule, vocab, target_role);
    std::vector<int> choices;
    for (std::size_t p = 0; p < blocks; ++p) {
      if (p != target_position) choices.push_back(static_cast<int>(p));
    }
    enumerate_terms(plan, choices, static_cast<int>(target_position), f.terms);
  }
  f.canonicalize();
  return f;
}

KDnfFormula compile_rule_relative(const CoreRule& rule, const AugmentedVocabulary& vocab,
                                  int max_offset, int target_role) {
  check_role(rule, vocab, target_role);
  if (max_offset < 1) throw DataError("max offset M must be >= 1");
  KDnfFormula f{vocab.role_token(rule.rhs_attribute(), target_role), rule.max_arity_sum(),
                Frame::relative, {}};
  std::vector<int> choices;
  for (int d = -max_offset; d <= max_offset; ++d) {
    if (d != 0) choices.push_back(d);
  }
  for (const auto& expr : rule.lhs()) {
    enumerate_terms(plan_disjunct(expr, rule, vocab, target_role), choices, 0, f.terms);
  }
  f.canonicalize();
  return f;
}

bool term_fires(const Term& term, Frame frame, const BlockPresenceFeatures& features,
                std::size_t target_block) {
  const long base = frame == Frame::relative ? static_cast<long>(target_block) : 0;
  for (const auto& lit : term) {
    const long b = base + lit.block;
    if (b < 0 || b >= static_cast<long>(features.blocks())) return false;
    if (!features.test(static_cast<std::size_t>(b), lit.token)) return false;
  }
  return true;
}

std::optional<std::size_t> first_firing_term(const KDnfFormula& formula,
                                             const BlockPresenceFeatures& features,
                                             std::size_t target_block) {
  for (std::size_t i = 0; i < formula.terms.size(); ++i) {
    for (const auto& lit : formula.terms[i]) {
      if (lit.token.value >= features.tokens()) {
        throw DataError("formula token id " + std::to_string(lit.token.value) +
                        " is not in the feature vocabulary");
      }
    }
    if (term_fires(formula.terms[i], formula.frame, features, target_block)) return i;
  }
  return std::nullopt;
}

std::string format_term(const Term& term, const AugmentedVocabulary& vocab) {
  std::string out;
  for (std::size_t i = 0; i < term.size(); ++i) {
    if (i) out += ' ';
    out += "(" + std::to_string(term[i].block) + "," + vocab.name(term[i].token) + ")";
  }
  return out;
}

Term parse_term(std::string_view text, const AugmentedVocabulary& vocab) {
  Term t;
  std::size_t pos = 0;
  while (true) {
    pos = text.find_first_not_of(" \t", pos);
    if (pos == std::string_view::npos) break;
    if (text[pos] != '(') throw DataError("term: expected '(' in '" + std::string(text) + "'");
    const auto comma = text.find(',', pos);
    const auto close = text.find(')', pos);
    if (comma == std::string_view::npos || close == std::string_view::npos || comma > close) {
      throw DataError("term: malformed literal in '" + std::string(text) + "'");
    }
    const std::string num(text.substr(pos + 1, comma - pos - 1));
    int block = 0;
    try {
      std::size_t used = 0;
      block = std::stoi(num, &used);
      if (used != num.size()) throw std::invalid_argument(num);
    } catch (const std::exception&) {
      throw DataError("term: bad block reference '" + num + "'");
    }
    t.push_back({block, vocab.token(text.substr(comma + 1, close - comma - 1))});
    pos = close + 1;
  }
  canonicalize(t);
  return t;
}

void write_formula(std::ostream& out, const KDnfFormula& formula,
                   const AugmentedVocabulary& vocab) {
  out << "target " << vocab.name(formula.target) << " k " << formula.k << " frame "
      << (formula.frame == Frame::absolute ? "abs" : "rel") << '\n';
  for (const auto& t : formula.terms) out << format_term(t, vocab) << '\n';
}

std::vector<KDnfFormula> read_formulas(std::istream& in, const AugmentedVocabulary& vocab) {
  std::vector<KDnfFormula> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (line.rfind("target ", 0) == 0) {
      std::istringstream f(line);
      std::string kw, target, kkw, fkw, frame;
      KDnfFormula formula;
      if (!(f >> kw >> target >> kkw >> formula.k >> fkw >> frame) || kkw != "k" ||
          fkw != "frame" || (frame != "abs" && frame != "rel")) {
        throw DataError("formula header malformed: '" + line + "'");
      }
      formula.target = vocab.token(target);
      formula.frame = frame == "abs" ? Frame::absolute : Frame::relative;
      out.push_back(std::move(formula));
      continue;
    }
    if (out.empty()) throw DataError("formula term before any 'target' header");
    out.back().terms.push_back(parse_term(line, vocab));
  }
  return out;
}

}  // namespace uri
