#include <gtest/gtest.h>

#include <sstream>

#include "uri/error.hpp"
#include "uri/vocabulary.hpp"

using namespace uri;

TEST(Vocabulary, RelationsSplitIntoRoleTokens) {
  const auto v = AugmentedVocabulary::define({"Bob", "Joe", "Sue"},
                                             {{"Insulted", 2}, {"Likes", 2}, {"Revenges", 2}});
  for (const char* t : {"Insulted^1", "Insulted^2", "Likes^1", "Likes^2", "Revenges^1",
                        "Revenges^2"}) {
    EXPECT_TRUE(v.find(t).has_value()) << t;
  }
  EXPECT_EQ(v.original_size(), 3U);
  EXPECT_EQ(v.size(), 9U);
  EXPECT_EQ(v.expansion_ratio(), (Ratio{3, 1}));
}

TEST(Vocabulary, UnaryAttributeKeepsItsName) {
  const auto v = AugmentedVocabulary::define({"Bob"}, {{"Tall", 1}});
  EXPECT_EQ(v.size(), 2U);
  EXPECT_TRUE(v.find("Tall").has_value());
  EXPECT_FALSE(v.find("Tall^1").has_value());
  EXPECT_EQ(v.expansion_ratio(), (Ratio{2, 1}));
  EXPECT_FALSE(v.is_original(v.token("Tall")));
}

TEST(Vocabulary, TernaryRelation) {
  const auto v = AugmentedVocabulary::define({"a", "b", "c"}, {{"Gives", 3}});
  EXPECT_EQ(v.role_token("Gives", 3), v.token("Gives^3"));
  EXPECT_EQ(v.size(), 6U);
  const auto role = v.role_of(v.token("Gives^2"));
  ASSERT_TRUE(role.has_value());
  EXPECT_EQ(role->role, 2);
  EXPECT_EQ(v.attributes()[role->attribute].name, "Gives");
}

TEST(Vocabulary, OrderingIsLexicographicThenRole) {
  const auto v = AugmentedVocabulary::define({"Sue", "Bob"}, {{"Likes", 2}, {"Fled", 1}},
                                             {"the"});
  const std::vector<std::string> expect{"Bob", "Sue", "the", "Fled", "Likes^1", "Likes^2"};
  EXPECT_EQ(std::vector<std::string>(v.tokens().begin(), v.tokens().end()), expect);
  EXPECT_TRUE(v.is_entity(v.token("Bob")));
  EXPECT_FALSE(v.is_entity(v.token("the")));
  EXPECT_TRUE(v.is_original(v.token("the")));
}

TEST(Vocabulary, DuplicateNamesAreRejectedByName) {
  try {
    AugmentedVocabulary::define({"Bob", "Bob"}, {});
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("Bob"), std::string::npos);
  }
  EXPECT_THROW(AugmentedVocabulary::define({"Likes"}, {{"Likes", 2}}), DataError);
  EXPECT_THROW(AugmentedVocabulary::define({"a"}, {{"P", 1}, {"P", 2}}), DataError);
  EXPECT_THROW(AugmentedVocabulary::define({"a b"}, {}), DataError);
  EXPECT_THROW(AugmentedVocabulary::define({"a"}, {{"P", 0}}), DataError);
}

TEST(Vocabulary, UnknownTokenThrows) {
  const auto v = AugmentedVocabulary::define({"Bob"}, {});
  EXPECT_THROW(v.token("Joe"), DataError);
}

TEST(Vocabulary, FileRoundTrip) {
  const auto v = AugmentedVocabulary::define({"Bob", "Joe"}, {{"Likes", 2}, {"Tall", 1}},
                                             {"then"});
  std::stringstream s;
  write_vocabulary(s, v);
  EXPECT_EQ(read_vocabulary(s), v);

  std::istringstream bad("entity Bob\nattr Likes two\n");
  EXPECT_THROW(read_vocabulary(bad), DataError);
}

TEST(Vocabulary, NameValidity) {
  EXPECT_TRUE(is_valid_name("Bob"));
  for (const char* bad : {"", "_", "a b", "x^1", "y*", "p(q", "a,b", "c;", "#d"}) {
    EXPECT_FALSE(is_valid_name(bad)) << bad;
  }
}
