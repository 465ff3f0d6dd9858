#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "uri/codec.hpp"
#include "uri/scene.hpp"

namespace uri {

/// Closed lexicon for the controlled language. Gender tags are single
/// letters; `n` is compatible with every tag.
struct Lexicon {
  struct Verb {
    std::string attribute;
    int arity = 2;
  };

  std::map<std::string, Verb, std::less<>> verbs;
  std::map<std::string, char, std::less<>> names;
  /// Keys are lower case. he/him/she/her are always present.
  std::map<std::string, char, std::less<>> pronouns;

  Lexicon();

  const Verb* verb(std::string_view word) const;
  std::optional<char> name_gender(std::string_view word) const;
  std::optional<char> pronoun_gender(std::string_view word) const;
};

// Lines: `verb <word> <Attribute> <arity>`, `name <Name> <gender>`,
// `pronoun <word> <gender>`; `#` comments.
Lexicon read_lexicon(std::istream& in);
Lexicon load_lexicon(const std::string& path);

/// Names as entities, verb and pronoun words as plain words, one attribute
/// per verb, plus Near/2, Noun and Verb when `linguistic`.
AugmentedVocabulary lexicon_vocabulary(const Lexicon& lexicon, bool linguistic = true);

struct Mention {
  enum class Kind { name, pronoun };
  Kind kind = Kind::name;
  std::string word;
  std::size_t position = 0;
  std::size_t sentence = 0;
  char gender = 'n';
};

struct Coreference {
  /// representative[i]: index of the first mention of i's entity.
  std::vector<std::size_t> representative;
  /// Pronoun mentions with no compatible antecedent; each starts an entity.
  std::vector<std::size_t> unresolved;
};

/// Identical names share an entity; a pronoun joins the entity of the most
/// recent earlier gender-compatible name mention, skipping `exclude[i]`
/// (the other argument of its clause) when given.
Coreference resolve_coreference(const std::vector<Mention>& mentions,
                                const std::vector<std::optional<std::size_t>>& exclude = {});

struct ParsedText {
  Scene scene;
  std::vector<Mention> mentions;
  /// Entity of every mention.
  std::vector<EntityId> mention_entity;
  Coreference coreference;
};

/// Sentences `<Arg> <verb> <Arg>.` or `<Arg> <verb>.` where an argument is
/// a name or pronoun. Every word occupies one block; the first mention of
/// an entity is its position. Throws DataError with the location of
/// unknown words and malformed sentences.
ParsedText parse_controlled_text(std::string_view text, const Lexicon& lexicon);

/// Adds Near^1/Near^2 to every pair of noun blocks at distance <= threshold
/// (Near^1 on the earlier block) and a Noun or Verb token to each block
/// whose head is in the lexicon.
IntegracodedSequence augment_linguistic(const IntegracodedSequence& seq, int near_threshold,
                                        const Lexicon& lexicon);

}  // namespace uri
