#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "support.hpp"
#include "uri/error.hpp"

using namespace uri;
using namespace uri::test;

namespace {

ConjunctiveExpression story_body() {
  return ConjunctiveExpression({{"Insulted", {"x", "y"}}, {"Likes", {"z", "y"}}}, {"x", "z"},
                               {"y"});
}

}  // namespace

TEST(Scene, AtomsAreASortedSet) {
  Scene s(4);
  const auto a = s.add_entity("a", 0);
  const auto b = s.add_entity("b", 2);
  s.add_atom("P", {b, a});
  s.add_atom("P", {a, b});
  s.add_atom("P", {b, a});
  EXPECT_EQ(s.atoms().size(), 2U);
  EXPECT_TRUE(std::is_sorted(s.atoms().begin(), s.atoms().end()));
  EXPECT_EQ(s.atoms_of("P").size(), 2U);
  EXPECT_TRUE(s.has_repeated_attribute());
  EXPECT_EQ(s.remove_attribute("P"), 2U);
  EXPECT_TRUE(s.atoms().empty());
}

TEST(Scene, RejectsBadPlacements) {
  Scene s(2);
  s.add_entity("a", 0);
  EXPECT_THROW(s.add_entity("b", 0), DataError);
  EXPECT_THROW(s.add_entity("c", 2), DataError);
  EXPECT_THROW(s.add_atom("P", {0, 5}), DataError);
}

TEST(Scene, EqualityIgnoresEntityNumbering) {
  Scene a(3), b(3);
  const auto a1 = a.add_entity("x", 0);
  const auto a2 = a.add_entity("y", 2);
  a.add_atom("P", {a1, a2});
  const auto b2 = b.add_entity("y", 2);
  const auto b1 = b.add_entity("x", 0);
  b.add_atom("P", {b1, b2});
  EXPECT_EQ(a, b);
  b.add_atom("P", {b2, b1});
  EXPECT_NE(a, b);
}

TEST(EvalConjunctive, StoryBindings) {
  const Scene s = story_scene();
  EXPECT_TRUE(eval_conjunctive(s, story_body(), {{"x", 0}, {"z", 2}}));
  EXPECT_FALSE(eval_conjunctive(s, story_body(), {{"x", 2}, {"z", 0}}));
}

TEST(EvalConjunctive, EmptySceneIsFalse) {
  Scene s(3);
  s.add_entity("a", 0);
  s.add_entity("b", 1);
  EXPECT_FALSE(eval_conjunctive(s, story_body(), {{"x", 0}, {"z", 1}}));
}

TEST(EvalConjunctive, DistinctVariablesNeedDistinctEntities) {
  Scene s(2);
  const auto a = s.add_entity("a", 0);
  const auto b = s.add_entity("b", 1);
  s.add_atom("Insulted", {a, b});
  s.add_atom("Likes", {a, b});
  // z = x would satisfy the atoms, but x and z must differ.
  EXPECT_FALSE(eval_conjunctive(s, story_body(), {{"x", a}, {"z", a}}));
}

TEST(EvalConjunctive, BindingErrors) {
  const Scene s = story_scene();
  EXPECT_THROW(eval_conjunctive(s, story_body(), {{"x", 0}}), DataError);
  EXPECT_THROW(eval_conjunctive(s, story_body(), {{"x", 0}, {"z", 1}, {"y", 2}}), DataError);
}

TEST(ApplyRule, StoryDerivesRevenge) {
  const auto out = apply_rule(story_scene(false), story_rule());
  ASSERT_EQ(out.size(), 1U);
  EXPECT_EQ(out[0], (GroundAtom{"Revenges", {2, 0}}));
}

TEST(ApplyRule, NoLikesNoRevenge) {
  Scene s(3);
  const auto a = s.add_entity("Bob", 0);
  const auto b = s.add_entity("Joe", 1);
  s.add_atom("Insulted", {a, b});
  EXPECT_TRUE(apply_rule(s, story_rule()).empty());
}

TEST(ApplyRule, TwoDisjointTriplesMatchBruteForce) {
  Scene s(6);
  std::vector<EntityId> e;
  for (int i = 0; i < 6; ++i) e.push_back(s.add_entity("e" + std::to_string(i), static_cast<std::size_t>(i)));
  s.add_atom("Insulted", {e[0], e[1]});
  s.add_atom("Likes", {e[2], e[1]});
  s.add_atom("Insulted", {e[3], e[4]});
  s.add_atom("Likes", {e[5], e[4]});
  const auto out = apply_rule(s, story_rule());
  const auto oracle = brute_apply(s, story_rule());
  EXPECT_EQ(out.size(), 2U);
  EXPECT_EQ(std::set<GroundAtom>(out.begin(), out.end()), oracle);
}

TEST(ApplyRule, RandomScenesMatchBruteForce) {
  const auto vocab = AugmentedVocabulary::define({"a", "b", "c", "d", "e"},
                                                 {{"B", 2}, {"C", 2}, {"F", 1}, {"G", 3}});
  const std::vector<CoreRule> rules{
      parse_rule("r1: E(x,z) ~= exists y. B(x,y) & C(z,y) | G(x,z,y)"),
      parse_rule("r2: E(y) ~= exists x. B(x,y) & F(x)"),
      parse_rule("r3: E(y,z) ~= exists x. B(x,y) & C(x,z)"),
      parse_rule("r4: E(x) ~= F(x) | exists u v. G(u,x,v)"),
  };
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const Scene s = random_scene(rng, vocab, 6, 2 + trial % 4, 3);
    for (const auto& r : rules) {
      const auto out = apply_rule(s, r);
      ASSERT_EQ(std::set<GroundAtom>(out.begin(), out.end()), brute_apply(s, r)) << to_string(r);
    }
  }
}

TEST(ApplyRule, MonotoneInAtoms) {
  const auto vocab = AugmentedVocabulary::define({"a", "b", "c", "d"}, {{"Insulted", 2}, {"Likes", 2}});
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    Scene s = random_scene(rng, vocab, 5, 4, 2);
    const auto before = apply_rule(s, story_rule());
    s.add_atom("Likes", {static_cast<EntityId>(trial % 4), static_cast<EntityId>((trial + 1) % 4)});
    const auto after = apply_rule(s, story_rule());
    EXPECT_TRUE(std::includes(after.begin(), after.end(), before.begin(), before.end()));
  }
}

TEST(ComposeRules, NestedExampleNeedsFiveLiterals) {
  const auto inner = parse_rule("d: D(y,z) ~= exists x. B(x,y) & C(x,z)");
  const auto outer = parse_rule("e: E(y) ~= exists z. D(y,z) & F(z)");
  const auto composed = compose_rules(outer, inner);
  ASSERT_EQ(composed.lhs().size(), 1U);
  const auto& d = composed.lhs()[0];
  EXPECT_EQ(d.arity_sum(), 5);
  EXPECT_EQ(composed.max_arity_sum(), 5);
  std::vector<std::string> attrs;
  for (const auto& a : d.atoms()) attrs.push_back(a.attribute);
  EXPECT_EQ(attrs, (std::vector<std::string>{"B", "C", "F"}));
  EXPECT_EQ(std::vector<std::string>(d.free_vars().begin(), d.free_vars().end()),
            std::vector<std::string>{"y"});
  EXPECT_EQ(d.existential_vars().size(), 2U);
}

TEST(ComposeRules, IdentityInnerLeavesOuterUnchanged) {
  const auto inner = parse_rule("id: D(y,z) ~= D(y,z)");
  const auto outer = parse_rule("e: E(y) ~= exists z. D(y,z) & F(z)");
  const auto composed = compose_rules(outer, inner);
  ASSERT_EQ(composed.lhs().size(), 1U);
  EXPECT_EQ(composed.lhs()[0], outer.lhs()[0]);
}

TEST(ComposeRules, AritySumBookkeeping) {
  const auto inner = parse_rule("d: D(y,z) ~= exists u. G(y,u) & H(u,z)");
  const auto outer = parse_rule("e: E(y) ~= exists z. D(y,z) & F(z)");
  const auto composed = compose_rules(outer, inner);
  const int expect = outer.lhs()[0].arity_sum() - 2 + inner.lhs()[0].arity_sum();
  EXPECT_EQ(expect, 5);
  int recomputed = 0;
  for (const auto& a : composed.lhs()[0].atoms()) recomputed += a.arity();
  EXPECT_EQ(composed.lhs()[0].arity_sum(), recomputed);
  EXPECT_EQ(recomputed, expect);
}

TEST(ComposeRules, DistributesOverInnerDisjunction) {
  const auto inner = parse_rule("d: D(y,z) ~= exists x. B(x,y) & C(x,z) | K(y,z)");
  const auto outer = parse_rule("e: E(y) ~= exists z. D(y,z) & F(z) | F(y)");
  const auto composed = compose_rules(outer, inner);
  ASSERT_EQ(composed.lhs().size(), 3U);
  for (const auto& d : composed.lhs()) {
    int k = 0;
    for (const auto& a : d.atoms()) k += a.arity();
    EXPECT_EQ(d.arity_sum(), k);
  }
}

TEST(ComposeRules, Rejections) {
  const auto inner = parse_rule("d: D(y,z) ~= exists x. B(x,y) & C(x,z)");
  EXPECT_THROW(compose_rules(parse_rule("e: E(y) ~= F(y)"), inner), DataError);
  EXPECT_THROW(compose_rules(parse_rule("e: E(y) ~= exists z w. D(y,z) & D(z,w)"), inner),
               DataError);
  EXPECT_THROW(compose_rules(parse_rule("e: E(y) ~= exists z w. D(y,z,w)"), inner), DataError);
}

// Where inner holds exactly, composing equals applying inner then outer.
TEST(ComposeRules, PreservesSemanticsByBruteForce) {
  const auto vocab = AugmentedVocabulary::define({"a", "b", "c", "d", "e", "f"},
                                                 {{"B", 2}, {"C", 2}, {"F", 1}, {"D", 2}});
  const auto inner = parse_rule("d: D(y,z) ~= exists x. B(x,y) & C(x,z)");
  const auto outer = parse_rule("e: E(y) ~= exists z. D(y,z) & F(z)");
  const auto composed = compose_rules(outer, inner);
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    Scene s = random_scene(rng, vocab, 7, 3 + trial % 4, 3, {"D"});
    const auto direct = apply_rule(s, composed);
    for (auto& atom : apply_rule(s, inner)) s.add_atom(std::move(atom));
    EXPECT_EQ(direct, apply_rule(s, outer));
  }
}

TEST(Schemas, DegreesMatchTable) {
  const int expect[] = {1, 2, 3, 4, 4, 4};
  for (int i = 1; i <= 6; ++i) EXPECT_EQ(schema_expression(i, "B", "C").arity_sum(), expect[i - 1]);
  EXPECT_THROW(schema_expression(7, "B"), DataError);
}

TEST(RuleText, ParseAndPrintRoundTrip) {
  const auto r = parse_rule("revenge: Revenges(z,x) ~= exists y. Insulted(x,y) & Likes(z,y) | Hates(z,x)");
  EXPECT_EQ(r.name(), "revenge");
  EXPECT_EQ(r.lhs().size(), 2U);
  EXPECT_EQ(r.max_arity_sum(), 4);
  EXPECT_EQ(parse_rule(to_string(r)), r);
  // The exists prefix is optional.
  EXPECT_EQ(parse_rule("revenge: Revenges(z,x) ~= Insulted(x,y) & Likes(z,y) | Hates(z,x)"), r);
}

TEST(RuleText, Errors) {
  EXPECT_THROW(parse_rule("r: E(x) ~= "), DataError);
  EXPECT_THROW(parse_rule("r: E(x) ~= B(x,x)"), DataError);
  EXPECT_THROW(parse_rule("r: E(x,y) ~= B(x)"), DataError);
  EXPECT_THROW(parse_rule("r E(x) ~= B(x)"), DataError);
  EXPECT_THROW(parse_rule("r: E(x) ~= exists y. B(x)"), DataError);
  std::istringstream file("# comment\na: E(x) ~= B(x)\n\nb: E(x) ~= C(x)\n");
  EXPECT_EQ(read_rules(file).size(), 2U);
}

TEST(RuleValidation, AgainstVocabulary) {
  const auto v = story_vocab();
  EXPECT_NO_THROW(story_rule().validate(*v));
  EXPECT_THROW(parse_rule("r: Revenges(z,x) ~= Hates(z,x)").validate(*v), DataError);
  EXPECT_THROW(parse_rule("r: Revenges(z,x) ~= exists y. Likes(z,y,x)").validate(*v), DataError);
}
