#include <gtest/gtest.h>

#include <sstream>

#include "support.hpp"
#include "uri/error.hpp"

using namespace uri;
using namespace uri::test;

namespace {

std::vector<std::string> slot_names(const IntegracodedSequence& seq, std::size_t block) {
  std::vector<std::string> out;
  for (const auto& s : seq.block(block).slots) out.push_back(s.token ? seq.vocab().name(*s.token) : "_");
  return out;
}

VocabularyPtr word_vocab() {
  return std::make_shared<const AugmentedVocabulary>(AugmentedVocabulary::define(
      {"a", "b", "c", "d", "e", "f"}, {{"P", 1}, {"Q", 2}, {"R", 2}, {"T", 3}}, {"w"}));
}

}  // namespace

TEST(Encode, StoryLayout) {
  const auto seq = encode_scene(story_scene(), 3, story_vocab());
  ASSERT_EQ(seq.size(), 3U);
  EXPECT_TRUE(seq.well_formed());
  EXPECT_EQ(seq.slot_count(), 9U);
  EXPECT_EQ(seq.vocab().name(seq.block(0).head), "Bob");
  EXPECT_EQ(slot_names(seq, 0), (std::vector<std::string>{"Insulted^1", "Revenges^2"}));
  EXPECT_EQ(slot_names(seq, 1), (std::vector<std::string>{"Insulted^2", "Likes^2"}));
  EXPECT_EQ(slot_names(seq, 2), (std::vector<std::string>{"Likes^1", "Revenges^1"}));
}

TEST(Encode, EmptySlotsPadToH) {
  const auto seq = encode_scene(story_scene(false), 4, story_vocab());
  EXPECT_TRUE(seq.well_formed());
  EXPECT_EQ(seq.slot_count(), 12U);
  EXPECT_EQ(slot_names(seq, 0), (std::vector<std::string>{"Insulted^1", "_", "_"}));
}

TEST(Encode, OverflowNamesTheBlock) {
  EXPECT_EQ(required_block_size(story_scene()), 3U);
  try {
    encode_scene(story_scene(), 2, story_vocab());
    FAIL() << "expected overflow";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("block 1 (Joe)"), std::string::npos) << e.what();
  }
}

TEST(Encode, UnknownAttributeOrWord) {
  Scene s = story_scene();
  s.add_atom("Hates", {0, 1});
  EXPECT_THROW(encode_scene(s, 4, story_vocab()), DataError);
  Scene t(2);
  t.add_entity("Bob", 0);
  t.set_word(1, "zzz");
  EXPECT_THROW(encode_scene(t, 2, story_vocab()), DataError);
}

TEST(Encode, AddTokenGrowsWhenFull) {
  IntegracodedSequence seq(story_vocab(), 2);
  seq.append_block(seq.vocab().token("Bob"));
  EXPECT_FALSE(seq.add_token(0, seq.vocab().token("Likes^1")));
  EXPECT_TRUE(seq.add_token(0, seq.vocab().token("Likes^2"), Provenance::predicted));
  EXPECT_FALSE(seq.well_formed());
  EXPECT_EQ(seq.block(0).slots.back().provenance, Provenance::predicted);
}

TEST(BitView, CountsAndPositions) {
  const auto seq = encode_scene(story_scene(), 3, story_vocab());
  const auto bits = to_bit_sequence(seq);
  const auto& v = seq.vocab();
  EXPECT_EQ(bits.block_stride(), v.original_size() + 2 * v.size());
  EXPECT_EQ(bits.size(), 3 * bits.block_stride());
  EXPECT_EQ(bits.popcount(), 9U);
  EXPECT_TRUE(bits.test(bits.head_bit(2, v.token("Sue"))));
  EXPECT_TRUE(bits.test(bits.slot_bit(1, 3, v.token("Likes^2"))));
  EXPECT_FALSE(bits.test(bits.slot_bit(1, 2, v.token("Likes^2"))));
}

TEST(Presence, MatchesSceneAndSequence) {
  const auto vocab = word_vocab();
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const Scene s = random_scene(rng, *vocab, 7, 4, 3);
    const auto seq = encode_scene(s, required_block_size(s), vocab);
    const auto pres = to_block_presence(seq);
    EXPECT_EQ(pres, scene_presence(s, *vocab));
    // Independent count: one bit per head plus one per atom argument.
    std::size_t expect = s.blocks();
    for (const auto& a : s.atoms()) expect += a.args.size();
    std::size_t got = 0;
    for (std::size_t b = 0; b < pres.blocks(); ++b) got += pres.active(b).size();
    EXPECT_LE(got, expect);
    EXPECT_EQ(to_bit_sequence(seq).popcount(), expect);
  }
}

TEST(Presence, WithoutClearsTokens) {
  const auto v = story_vocab();
  const auto pres = scene_presence(story_scene(), *v);
  const std::vector<TokenId> drop{v->token("Revenges^1"), v->token("Revenges^2")};
  const auto cut = pres.without(drop);
  EXPECT_TRUE(pres.test(2, drop[0]));
  EXPECT_FALSE(cut.test(2, drop[0]));
  EXPECT_FALSE(cut.test(0, drop[1]));
  EXPECT_TRUE(cut.test(2, v->token("Likes^1")));
}

TEST(Decode, InvertsEncodingWhenPairingIsUnique) {
  const auto vocab = word_vocab();
  std::mt19937_64 rng(7);
  int checked = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const Scene s = random_scene(rng, *vocab, 8, 5, 1);
    const auto seq = encode_scene(s, required_block_size(s), vocab);
    const auto dec = decode_sequence(seq);
    // Entities with no atoms decode as words, so only compare atom-covered scenes.
    bool all_covered = true;
    for (EntityId e = 0; e < s.entities().size(); ++e) {
      all_covered &= std::any_of(s.atoms().begin(), s.atoms().end(), [&](const GroundAtom& a) {
        return std::find(a.args.begin(), a.args.end(), e) != a.args.end();
      });
    }
    EXPECT_TRUE(dec.report.empty());
    if (!all_covered) continue;
    EXPECT_EQ(dec.scene, s);
    ++checked;
  }
  EXPECT_GT(checked, 20);
}

TEST(Decode, AmbiguousPairingListsEveryCandidate) {
  const auto vocab = word_vocab();
  Scene s(4);
  const auto a = s.add_entity("a", 0);
  const auto b = s.add_entity("b", 1);
  const auto c = s.add_entity("c", 2);
  const auto d = s.add_entity("d", 3);
  s.add_atom("Q", {a, b});
  s.add_atom("Q", {c, d});
  const auto dec = decode_sequence(encode_scene(s, 2, vocab));
  ASSERT_EQ(dec.report.ambiguous.size(), 1U);
  const auto& amb = dec.report.ambiguous[0];
  EXPECT_EQ(amb.attribute, "Q");
  EXPECT_FALSE(amb.truncated);
  ASSERT_EQ(amb.candidates.size(), 2U);
  const std::vector<GroundAtom> truth{{"Q", {0, 1}}, {"Q", {2, 3}}};
  EXPECT_NE(std::find(amb.candidates.begin(), amb.candidates.end(), truth), amb.candidates.end());
  EXPECT_TRUE(dec.scene.atoms().empty());
}

TEST(Decode, TruncatesHugePairingSpaces) {
  std::vector<std::string> names;
  for (int i = 0; i < 16; ++i) names.push_back("n" + std::to_string(i));
  const auto vocab =
      std::make_shared<const AugmentedVocabulary>(AugmentedVocabulary::define(names, {{"Q", 2}}));
  Scene s(16);
  for (int i = 0; i < 16; ++i) s.add_entity(names[static_cast<std::size_t>(i)], static_cast<std::size_t>(i));
  for (EntityId i = 0; i < 8; ++i) s.add_atom("Q", {i, i + 8});
  const auto dec = decode_sequence(encode_scene(s, 2, vocab));
  ASSERT_EQ(dec.report.ambiguous.size(), 1U);
  EXPECT_TRUE(dec.report.ambiguous[0].truncated);
}

TEST(Decode, ReportsIncompleteRelations) {
  const auto v = story_vocab();
  IntegracodedSequence seq(v, 2);
  seq.append_block(v->token("Bob"));
  seq.append_block(v->token("Joe"));
  seq.add_token(0, v->token("Likes^1"));
  const auto dec = decode_sequence(seq);
  ASSERT_EQ(dec.report.incomplete.size(), 1U);
  EXPECT_EQ(dec.report.incomplete[0].role_counts, (std::vector<std::size_t>{1, 0}));
}

TEST(Decode, WordHeadWithRolesBecomesEntity) {
  const auto vocab = word_vocab();
  IntegracodedSequence seq(vocab, 2);
  seq.append_block(vocab->token("w"));
  seq.append_block(vocab->token("w"));
  seq.add_token(0, vocab->token("P"));
  const auto dec = decode_sequence(seq);
  EXPECT_TRUE(dec.scene.entity_at(0).has_value());
  EXPECT_FALSE(dec.scene.entity_at(1).has_value());
  EXPECT_EQ(dec.scene.atoms().size(), 1U);
}

TEST(SequenceFile, RoundTrip) {
  const auto v = story_vocab();
  auto a = encode_scene(story_scene(false), 3, v);
  a.add_token(2, v->token("Revenges^1"), Provenance::predicted);
  const auto b = encode_scene(story_scene(), 4, v);
  std::stringstream io;
  write_sequence(io, a);
  io << '\n';
  write_sequence(io, b);
  EXPECT_NE(io.str().find("Revenges^1*"), std::string::npos);
  const auto back = read_sequences(io, v);
  ASSERT_EQ(back.size(), 2U);
  EXPECT_EQ(back[0], a);
  EXPECT_EQ(back[1], b);
}

TEST(SequenceFile, Errors) {
  const auto v = story_vocab();
  std::istringstream bad("# h=2\nBob\tNope\n");
  EXPECT_THROW(read_sequences(bad, v), DataError);
  std::istringstream zero("# h=0\nBob\n");
  EXPECT_THROW(read_sequences(zero, v), DataError);
}

TEST(SceneFile, RoundTrip) {
  const auto vocab = word_vocab();
  std::mt19937_64 rng(9);
  std::stringstream io;
  std::vector<Scene> scenes;
  for (int i = 0; i < 30; ++i) {
    scenes.push_back(random_scene(rng, *vocab, 6, 4, 2));
    write_scene(io, scenes.back());
  }
  const auto back = read_scene_dataset(io);
  ASSERT_EQ(back.size(), scenes.size());
  for (std::size_t i = 0; i < back.size(); ++i) EXPECT_EQ(back[i], scenes[i]);
}

TEST(SceneFile, Errors) {
  EXPECT_THROW(parse_scene_record("N 2; E 0 a 5"), DataError);
  EXPECT_THROW(parse_scene_record("N 2; A P 0"), DataError);
  EXPECT_THROW(parse_scene_record("N 2; X"), DataError);
  // N defaults to the last occupied block.
  EXPECT_EQ(parse_scene_record("E 0 a 3").blocks(), 4U);
}
