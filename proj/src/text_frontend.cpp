#include "uri/text_frontend.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>

#include "uri/error.hpp"

namespace uri {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool compatible(char a, char b) { return a == b || a == 'n' || b == 'n'; }

}  // namespace

Lexicon::Lexicon() {
  pronouns = {{"he", 'm'}, {"him", 'm'}, {"she", 'f'}, {"her", 'f'}};
}

const Lexicon::Verb* Lexicon::verb(std::string_view word) const {
  const auto it = verbs.find(word);
  return it == verbs.end() ? nullptr : &it->second;
}

std::optional<char> Lexicon::name_gender(std::string_view word) const {
  const auto it = names.find(word);
  if (it == names.end()) return std::nullopt;
  return it->second;
}

std::optional<char> Lexicon::pronoun_gender(std::string_view word) const {
  const auto it = pronouns.find(lower(word));
  if (it == pronouns.end()) return std::nullopt;
  return it->second;
}

Lexicon read_lexicon(std::istream& in) {
  Lexicon lex;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream f(line);
    std::string kind;
    if (!(f >> kind)) continue;
    const std::string where = "lexicon line " + std::to_string(lineno);
    if (kind == "verb") {
      std::string word, attr;
      int arity = 0;
      if (!(f >> word >> attr >> arity) || arity < 1 || arity > 2) {
        throw DataError(where + ": expected 'verb <word> <Attribute> <1|2>'");
      }
      lex.verbs[word] = {attr, arity};
    } else if (kind == "name" || kind == "pronoun") {
      std::string word, gender;
      if (!(f >> word >> gender) || gender.size() != 1) {
        throw DataError(where + ": expected '" + kind + " <word> <gender letter>'");
      }
      if (kind == "name") {
        lex.names[word] = gender[0];
      } else {
        lex.pronouns[lower(word)] = gender[0];
      }
    } else {
      throw DataError(where + ": unknown entry '" + kind + "'");
    }
  }
  return lex;
}

Lexicon load_lexicon(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open lexicon '" + path + "'");
  return read_lexicon(in);
}

AugmentedVocabulary lexicon_vocabulary(const Lexicon& lexicon, bool linguistic) {
  std::vector<std::string> entities;
  for (const auto& [name, g] : lexicon.names) entities.push_back(name);
  std::vector<std::string> words;
  std::map<std::string, int> attrs;
  for (const auto& [word, v] : lexicon.verbs) {
    words.push_back(word);
    const auto [it, fresh] = attrs.emplace(v.attribute, v.arity);
    if (!fresh && it->second != v.arity) {
      throw DataError("lexicon gives attribute '" + v.attribute + "' two arities");
    }
  }
  for (const auto& [word, g] : lexicon.pronouns) words.push_back(word);
  if (linguistic) {
    attrs.emplace("Near", 2);
    attrs.emplace("Noun", 1);
    attrs.emplace("Verb", 1);
  }
  std::vector<Attribute> attributes;
  for (const auto& [name, arity] : attrs) attributes.push_back({name, arity});
  return AugmentedVocabulary::define(std::move(entities), std::move(attributes), std::move(words));
}

Coreference resolve_coreference(const std::vector<Mention>& mentions,
                                const std::vector<std::optional<std::size_t>>& exclude) {
  Coreference out;
  out.representative.resize(mentions.size());
  std::map<std::string, std::size_t> first_name;
  for (std::size_t i = 0; i < mentions.size(); ++i) {
    const auto& m = mentions[i];
    if (m.kind == Mention::Kind::name) {
      out.representative[i] = first_name.emplace(m.word, i).first->second;
      continue;
    }
    const std::optional<std::size_t> avoid =
        i < exclude.size() && exclude[i] ? std::optional(out.representative[*exclude[i]])
                                         : std::nullopt;
    std::optional<std::size_t> found;
    for (std::size_t j = i; j-- > 0;) {
      const auto& c = mentions[j];
      if (c.kind != Mention::Kind::name || !compatible(c.gender, m.gender)) continue;
      if (avoid && out.representative[j] == *avoid) continue;
      found = out.representative[j];
      break;
    }
    if (found) {
      out.representative[i] = *found;
    } else {
      out.representative[i] = i;
      out.unresolved.push_back(i);
    }
  }
  return out;
}

ParsedText parse_controlled_text(std::string_view text, const Lexicon& lexicon) {
  // Split into sentences of whitespace-separated words.
  std::vector<std::vector<std::string>> sentences;
  {
    std::vector<std::string> cur;
    std::string word;
    auto flush_word = [&] {
      if (!word.empty()) cur.push_back(std::move(word));
      word.clear();
    };
    for (char c : text) {
      if (c == '.') {
        flush_word();
        if (cur.empty()) throw DataError("sentence " + std::to_string(sentences.size() + 1) + ": empty sentence");
        sentences.push_back(std::move(cur));
        cur.clear();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        flush_word();
      } else {
        word += c;
      }
    }
    flush_word();
    if (!cur.empty()) {
      throw DataError("sentence " + std::to_string(sentences.size() + 1) +
                      ": missing final '.'");
    }
  }

  struct Clause {
    std::size_t verb_position;
    const Lexicon::Verb* verb;
    std::vector<std::size_t> args;  // mention indices
  };
  ParsedText out;
  std::vector<Clause> clauses;
  std::vector<std::string> heads;
  std::vector<std::optional<std::size_t>> exclude;
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    const auto& words = sentences[s];
    const std::string where = "sentence " + std::to_string(s + 1);
    auto argument = [&](std::size_t w) {
      const std::string& word = words[w];
      Mention m;
      m.word = word;
      m.position = heads.size();
      m.sentence = s;
      if (auto g = lexicon.name_gender(word)) {
        m.kind = Mention::Kind::name;
        m.gender = *g;
        heads.push_back(word);
      } else if (auto pg = lexicon.pronoun_gender(word)) {
        m.kind = Mention::Kind::pronoun;
        m.gender = *pg;
        m.word = lower(word);
        heads.push_back(m.word);
      } else if (lexicon.verb(word)) {
        throw DataError(where + ", word " + std::to_string(w + 1) + ": expected a name or pronoun, got verb '" + word + "'");
      } else {
        throw DataError(where + ", word " + std::to_string(w + 1) + ": unknown word '" + word + "'");
      }
      out.mentions.push_back(std::move(m));
      exclude.emplace_back();
      return out.mentions.size() - 1;
    };
    if (words.size() < 2 || words.size() > 3) {
      throw DataError(where + ": expected '<Name> <verb> <Name>.' or '<Name> <verb>.', got " +
                      std::to_string(words.size()) + " words");
    }
    Clause clause{0, nullptr, {}};
    clause.args.push_back(argument(0));
    clause.verb = lexicon.verb(words[1]);
    if (!clause.verb) {
      throw DataError(where + ", word 2: " +
                      (lexicon.name_gender(words[1]) || lexicon.pronoun_gender(words[1])
                           ? "expected a verb, got '"
                           : "unknown word '") +
                      words[1] + "'");
    }
    clause.verb_position = heads.size();
    heads.push_back(words[1]);
    if (static_cast<std::size_t>(clause.verb->arity) != words.size() - 1) {
      throw DataError(where + ": verb '" + words[1] + "' takes " +
                      (clause.verb->arity == 2 ? "an object ('<Name> <verb> <Name>.')"
                                               : "no object ('<Name> <verb>.')"));
    }
    if (words.size() == 3) {
      clause.args.push_back(argument(2));
      exclude[clause.args[0]] = clause.args[1];
      exclude[clause.args[1]] = clause.args[0];
    }
    clauses.push_back(std::move(clause));
  }

  out.coreference = resolve_coreference(out.mentions, exclude);
  out.scene = Scene(heads.size());
  std::map<std::size_t, EntityId> entity_of_rep;
  out.mention_entity.resize(out.mentions.size());
  for (std::size_t i = 0; i < out.mentions.size(); ++i) {
    const auto rep = out.coreference.representative[i];
    const auto& m = out.mentions[i];
    if (rep == i) {
      entity_of_rep[i] = out.scene.add_entity(m.word, m.position);
    } else {
      out.scene.set_word(m.position, m.word);
    }
    out.mention_entity[i] = entity_of_rep.at(rep);
  }
  for (const auto& c : clauses) {
    out.scene.set_word(c.verb_position, heads[c.verb_position]);
    std::vector<EntityId> args;
    for (auto a : c.args) args.push_back(out.mention_entity[a]);
    if (args.size() == 2 && args[0] == args[1]) {
      throw DataError("sentence " + std::to_string(out.mentions[c.args[0]].sentence + 1) +
                      ": both arguments denote the same entity");
    }
    out.scene.add_atom(c.verb->attribute, std::move(args));
  }
  return out;
}

IntegracodedSequence augment_linguistic(const IntegracodedSequence& seq, int near_threshold,
                                        const Lexicon& lexicon) {
  if (near_threshold < 1) throw ConfigError("near threshold must be >= 1");
  const auto& vocab = seq.vocab();
  const auto* near = vocab.attribute("Near");
  if (!near || near->arity != 2 || !vocab.attribute("Noun") || !vocab.attribute("Verb")) {
    throw ConfigError("vocabulary lacks the Near/2, Noun and Verb attributes");
  }
  const TokenId near1 = vocab.role_token("Near", 1);
  const TokenId near2 = vocab.role_token("Near", 2);
  const TokenId noun = vocab.role_token("Noun", 1);
  const TokenId verb = vocab.role_token("Verb", 1);

  IntegracodedSequence out = seq;
  std::vector<std::size_t> nouns;
  for (std::size_t b = 0; b < seq.size(); ++b) {
    const std::string& head = vocab.name(seq.block(b).head);
    std::optional<TokenId> pos;
    if (lexicon.name_gender(head) || lexicon.pronoun_gender(head)) {
      pos = noun;
      nouns.push_back(b);
    } else if (lexicon.verb(head)) {
      pos = verb;
    }
    if (pos && !out.contains(b, *pos)) out.add_token(b, *pos);
  }
  const auto t = static_cast<std::size_t>(near_threshold);
  for (std::size_t i = 0; i < nouns.size(); ++i) {
    for (std::size_t j = i + 1; j < nouns.size() && nouns[j] - nouns[i] <= t; ++j) {
      if (!out.contains(nouns[i], near1)) out.add_token(nouns[i], near1);
      if (!out.contains(nouns[j], near2)) out.add_token(nouns[j], near2);
    }
  }
  return out;
}

}  // namespace uri
