#pragma once

// Fixtures and brute-force oracles shared by the unit tests.

#include <algorithm>
#include <functional>
#include <memory>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "uri/codec.hpp"
#include "uri/compiler.hpp"
#include "uri/learner.hpp"
#include "uri/rule.hpp"
#include "uri/scene.hpp"
#include "uri/vocabulary.hpp"

namespace uri::test {

inline VocabularyPtr story_vocab() {
  return std::make_shared<const AugmentedVocabulary>(AugmentedVocabulary::define(
      {"Bob", "Joe", "Sue"}, {{"Insulted", 2}, {"Likes", 2}, {"Revenges", 2}}));
}

/// Bob insulted Joe, Sue likes Joe, so Sue revenges on Bob; blocks 0, 1, 2.
inline Scene story_scene(bool with_revenge = true) {
  Scene s(3);
  const auto bob = s.add_entity("Bob", 0);
  const auto joe = s.add_entity("Joe", 1);
  const auto sue = s.add_entity("Sue", 2);
  s.add_atom("Insulted", {bob, joe});
  s.add_atom("Likes", {sue, joe});
  if (with_revenge) s.add_atom("Revenges", {sue, bob});
  return s;
}

inline CoreRule story_rule() {
  return parse_rule("revenge: Revenges(z,x) ~= exists y. Insulted(x,y) & Likes(z,y)");
}

/// Tries every injective assignment of entities to the disjunct's variables.
inline bool brute_disjunct(const Scene& scene, const ConjunctiveExpression& d,
                           const std::vector<std::pair<std::string, EntityId>>& fixed) {
  const auto vars = d.variables();
  const std::size_t n = scene.entities().size();
  if (vars.size() > n) return false;
  std::vector<EntityId> ids(n);
  std::iota(ids.begin(), ids.end(), 0U);
  // Enumerate ordered selections via permutations of a 0/1 mask over ids.
  std::vector<std::size_t> pick(vars.size());
  std::function<bool(std::size_t, std::vector<bool>&)> rec = [&](std::size_t i,
                                                                std::vector<bool>& used) {
    if (i == vars.size()) {
      for (const auto& [v, e] : fixed) {
        const auto at = std::find(vars.begin(), vars.end(), v) - vars.begin();
        if (ids[pick[static_cast<std::size_t>(at)]] != e) return false;
      }
      for (const auto& a : d.atoms()) {
        GroundAtom g{a.attribute, {}};
        for (const auto& v : a.vars) {
          g.args.push_back(ids[pick[static_cast<std::size_t>(std::find(vars.begin(), vars.end(), v) - vars.begin())]]);
        }
        if (!scene.contains(g)) return false;
      }
      return true;
    }
    for (std::size_t e = 0; e < n; ++e) {
      if (used[e]) continue;
      used[e] = true;
      pick[i] = e;
      const bool ok = rec(i + 1, used);
      used[e] = false;
      if (ok) return true;
    }
    return false;
  };
  std::vector<bool> used(n, false);
  return rec(0, used);
}

/// apply_rule by exhaustive enumeration of rhs tuples.
inline std::set<GroundAtom> brute_apply(const Scene& scene, const CoreRule& rule) {
  std::set<GroundAtom> out;
  const std::size_t n = scene.entities().size();
  const auto r = static_cast<std::size_t>(rule.rhs_arity());
  std::vector<EntityId> tuple(r);
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == r) {
      std::vector<std::pair<std::string, EntityId>> fixed;
      for (std::size_t j = 0; j < r; ++j) fixed.emplace_back(rule.rhs_vars()[j], tuple[j]);
      for (const auto& d : rule.lhs()) {
        if (brute_disjunct(scene, d, fixed)) {
          out.insert(GroundAtom{rule.rhs_attribute(), tuple});
          return;
        }
      }
      return;
    }
    for (EntityId e = 0; e < n; ++e) {
      if (std::find(tuple.begin(), tuple.begin() + static_cast<long>(i), e) != tuple.begin() + static_cast<long>(i)) continue;
      tuple[i] = e;
      rec(i + 1);
    }
  };
  rec(0);
  return out;
}

/// Random scene: `entities` entities on random blocks, each listed attribute
/// given `atoms_per_attr` random atoms (repeats allowed when > 1).
inline Scene random_scene(std::mt19937_64& rng, const AugmentedVocabulary& vocab,
                          std::size_t blocks, std::size_t entities, std::size_t atoms_per_attr,
                          const std::vector<std::string>& skip = {}) {
  std::vector<std::size_t> pos(blocks);
  std::iota(pos.begin(), pos.end(), 0U);
  std::shuffle(pos.begin(), pos.end(), rng);
  Scene s(blocks);
  const auto names = vocab.entity_names();
  std::vector<EntityId> ids;
  for (std::size_t i = 0; i < entities; ++i) ids.push_back(s.add_entity(names[i % names.size()], pos[i]));
  for (std::size_t b = 0; b < blocks; ++b) {
    if (!s.entity_at(b)) s.set_word(b, vocab.words().empty() ? names[0] : vocab.words()[0]);
  }
  for (const auto& a : vocab.attributes()) {
    if (std::find(skip.begin(), skip.end(), a.name) != skip.end()) continue;
    if (static_cast<std::size_t>(a.arity) > entities) continue;
    const std::size_t count = std::uniform_int_distribution<std::size_t>(0, atoms_per_attr)(rng);
    for (std::size_t c = 0; c < count; ++c) {
      auto v = ids;
      std::shuffle(v.begin(), v.end(), rng);
      v.resize(static_cast<std::size_t>(a.arity));
      s.add_atom(a.name, v);
    }
  }
  return s;
}

/// Wraps a compiled relative formula as a learned target model.
inline TargetModel as_model(KDnfFormula f, int max_offset) {
  TargetModel m;
  m.target = f.target;
  m.k = f.k;
  m.max_offset = max_offset;
  m.hypothesis = std::move(f);
  return m;
}

}  // namespace uri::test
