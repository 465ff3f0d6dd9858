#include <gtest/gtest.h>

#include <sstream>

#include "support.hpp"
#include "uri/error.hpp"
#include "uri/text_frontend.hpp"

using namespace uri;
using namespace uri::test;

namespace {

const Lexicon& lex() {
  static const Lexicon l = load_lexicon(std::string(URI_DATA_DIR) + "/lexicon.txt");
  return l;
}

std::string error_of(std::string_view text) {
  try {
    parse_controlled_text(text, lex());
  } catch (const DataError& e) {
    return e.what();
  }
  return {};
}

Mention name(std::string w, std::size_t pos, char g) {
  return {Mention::Kind::name, std::move(w), pos, 0, g};
}
Mention pronoun(std::string w, std::size_t pos, char g) {
  return {Mention::Kind::pronoun, std::move(w), pos, 0, g};
}

}  // namespace

TEST(Lexicon, LoadsAndLooksUp) {
  ASSERT_NE(lex().verb("insulted"), nullptr);
  EXPECT_EQ(lex().verb("insulted")->attribute, "Insulted");
  EXPECT_EQ(lex().verb("fled")->arity, 1);
  EXPECT_EQ(lex().verb("jumped"), nullptr);
  EXPECT_EQ(lex().name_gender("Sue"), 'f');
  EXPECT_EQ(lex().pronoun_gender("He"), 'm');
  EXPECT_EQ(lex().pronoun_gender("her"), 'f');
  EXPECT_FALSE(lex().name_gender("Zed").has_value());
}

TEST(Lexicon, Errors) {
  auto fails = [](const std::string& text) {
    std::istringstream in(text);
    EXPECT_THROW(read_lexicon(in), DataError) << text;
  };
  fails("verb runs Runs\n");
  fails("verb runs Runs 3\n");
  fails("name Bob\n");
  fails("adjective tall\n");
  EXPECT_THROW(load_lexicon("/nonexistent/lexicon.txt"), ConfigError);
}

TEST(Lexicon, Vocabulary) {
  const auto v = lexicon_vocabulary(lex());
  EXPECT_TRUE(v.is_entity(v.token("Odysseus")));
  EXPECT_FALSE(v.is_entity(v.token("likes")));
  EXPECT_EQ(v.attribute("Likes")->arity, 2);
  EXPECT_EQ(v.attribute("Fled")->arity, 1);
  EXPECT_NE(v.attribute("Near"), nullptr);
  EXPECT_EQ(lexicon_vocabulary(lex(), false).attribute("Near"), nullptr);
  std::istringstream clash("verb likes Likes 2\nverb liking Likes 1\n");
  EXPECT_THROW(lexicon_vocabulary(read_lexicon(clash)), DataError);
}

TEST(Coreference, NamesPronounsAndExclusion) {
  const std::vector<Mention> m{name("Bob", 0, 'm'), name("Joe", 2, 'm'), name("Sue", 3, 'f'),
                               pronoun("he", 5, 'm'), pronoun("she", 7, 'f'), name("Bob", 9, 'm')};
  const auto c = resolve_coreference(m);
  EXPECT_EQ(c.representative, (std::vector<std::size_t>{0, 1, 2, 1, 2, 0}));
  EXPECT_TRUE(c.unresolved.empty());
  std::vector<std::optional<std::size_t>> exclude(m.size());
  exclude[3] = 1;
  EXPECT_EQ(resolve_coreference(m, exclude).representative[3], 0U);
}

TEST(Coreference, UnresolvedPronounStartsEntity) {
  const std::vector<Mention> m{name("Bob", 0, 'm'), pronoun("she", 2, 'f'), pronoun("her", 4, 'f')};
  const auto c = resolve_coreference(m);
  // Only name mentions serve as antecedents.
  EXPECT_EQ(c.unresolved, (std::vector<std::size_t>{1, 2}));
  EXPECT_EQ(c.representative[1], 1U);
  EXPECT_EQ(c.representative[2], 2U);
}

TEST(Parse, StoryScene) {
  const auto p = parse_controlled_text("Bob insulted Joe. Sue likes Joe. He fled.", lex());
  const Scene& s = p.scene;
  ASSERT_EQ(s.blocks(), 8U);
  ASSERT_EQ(s.entities().size(), 3U);
  EXPECT_EQ(s.entity(0).name, "Bob");
  EXPECT_EQ(s.entity(1).position, 2U);
  EXPECT_EQ(s.word_at(5), "Joe");
  EXPECT_FALSE(s.entity_at(5).has_value());
  EXPECT_EQ(p.mention_entity, (std::vector<EntityId>{0, 1, 2, 1, 1}));
  const std::set<GroundAtom> expect{{"Insulted", {0, 1}}, {"Likes", {2, 1}}, {"Fled", {1}}};
  EXPECT_EQ(std::set<GroundAtom>(s.atoms().begin(), s.atoms().end()), expect);
  const auto v = std::make_shared<const AugmentedVocabulary>(lexicon_vocabulary(lex()));
  EXPECT_NO_THROW(encode_scene(s, required_block_size(s), v));
}

TEST(Parse, ObjectPronounSkipsSubject) {
  const auto p = parse_controlled_text("Joe likes Sue. Bob insulted him.", lex());
  EXPECT_EQ(p.mention_entity.back(), p.mention_entity[0]);
}

TEST(Parse, ErrorsCarryLocation) {
  EXPECT_NE(error_of("Bob jumped Joe.").find("sentence 1, word 2"), std::string::npos);
  EXPECT_NE(error_of("Bob likes Joe. Sue likes Zed.").find("sentence 2, word 3"), std::string::npos);
  EXPECT_NE(error_of("Bob likes Joe").find("missing final"), std::string::npos);
  EXPECT_NE(error_of("Bob fled Joe.").find("sentence 1"), std::string::npos);
  EXPECT_NE(error_of("Bob likes Bob.").find("same entity"), std::string::npos);
  EXPECT_FALSE(error_of("Bob likes.").empty());
  EXPECT_FALSE(error_of("Bob. ").empty());
  EXPECT_FALSE(error_of("..").empty());
}

TEST(Augment, NearPairsWithinThreshold) {
  const auto p = parse_controlled_text("Bob insulted Joe. Sue likes Joe. He fled.", lex());
  const auto v = std::make_shared<const AugmentedVocabulary>(lexicon_vocabulary(lex()));
  const auto seq = encode_scene(p.scene, required_block_size(p.scene), v);
  for (int threshold : {1, 2, 3}) {
    const auto aug = augment_linguistic(seq, threshold, lex());
    std::vector<std::size_t> nouns;
    for (std::size_t b = 0; b < seq.size(); ++b) {
      const auto& w = v->name(seq.block(b).head);
      const bool noun = lex().name_gender(w) || lex().pronoun_gender(w);
      if (noun) nouns.push_back(b);
      EXPECT_EQ(aug.contains(b, v->token("Noun")), noun) << b;
      EXPECT_EQ(aug.contains(b, v->token("Verb")), lex().verb(w) != nullptr) << b;
    }
    for (std::size_t b = 0; b < seq.size(); ++b) {
      bool first = false, second = false;
      for (auto i : nouns) {
        for (auto j : nouns) {
          if (i < j && j - i <= static_cast<std::size_t>(threshold)) {
            first |= i == b;
            second |= j == b;
          }
        }
      }
      EXPECT_EQ(aug.contains(b, v->token("Near^1")), first) << "t=" << threshold << " b=" << b;
      EXPECT_EQ(aug.contains(b, v->token("Near^2")), second) << "t=" << threshold << " b=" << b;
    }
    // Original tokens are kept.
    for (std::size_t b = 0; b < seq.size(); ++b) {
      for (const auto& s : seq.block(b).slots) {
        if (s.token) EXPECT_TRUE(aug.contains(b, *s.token));
      }
    }
  }
  EXPECT_THROW(augment_linguistic(seq, 0, lex()), ConfigError);
  const auto plain = std::make_shared<const AugmentedVocabulary>(lexicon_vocabulary(lex(), false));
  EXPECT_THROW(augment_linguistic(encode_scene(p.scene, required_block_size(p.scene), plain), 2, lex()), ConfigError);
}
