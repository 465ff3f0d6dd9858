#include "uri/vocabulary.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "uri/error.hpp"

namespace uri {

std::string role_token_name(const Attribute& attr, int role) {
  if (attr.arity == 1) return attr.name;
  return attr.name + "^" + std::to_string(role);
}

bool is_valid_name(std::string_view name) {
  if (name.empty() || name == "_") return false;
  for (char c : name) {
    if (static_cast<unsigned char>(c) <= ' ') return false;
    if (std::string_view("^*(),;#").find(c) != std::string_view::npos) return false;
  }
  return true;
}

AugmentedVocabulary AugmentedVocabulary::define(std::vector<std::string> entity_names,
                                                std::vector<Attribute> attributes,
                                                std::vector<std::string> words) {
  std::set<std::string, std::less<>> seen;
  auto claim = [&seen](const std::string& name) {
    if (!is_valid_name(name)) throw DataError("invalid vocabulary name '" + name + "'");
    if (!seen.insert(name).second) throw DataError("duplicate vocabulary name '" + name + "'");
  };
  for (const auto& n : entity_names) claim(n);
  for (const auto& w : words) claim(w);
  for (const auto& a : attributes) {
    claim(a.name);
    if (a.arity < 1) throw DataError("attribute '" + a.name + "' must have arity >= 1");
  }

  AugmentedVocabulary v;
  std::sort(entity_names.begin(), entity_names.end());
  std::sort(words.begin(), words.end());
  std::sort(attributes.begin(), attributes.end(),
            [](const Attribute& a, const Attribute& b) { return a.name < b.name; });

  std::vector<std::pair<std::string, bool>> originals;
  for (const auto& n : entity_names) originals.emplace_back(n, true);
  for (const auto& w : words) originals.emplace_back(w, false);
  std::sort(originals.begin(), originals.end());
  for (auto& [name, is_entity] : originals) {
    v.names_.push_back(name);
    v.entity_flag_.push_back(is_entity);
    v.roles_.emplace_back();
  }
  v.original_count_ = v.names_.size();

  for (std::size_t i = 0; i < attributes.size(); ++i) {
    for (int role = 1; role <= attributes[i].arity; ++role) {
      v.names_.push_back(role_token_name(attributes[i], role));
      v.entity_flag_.push_back(false);
      v.roles_.push_back(Role{i, role});
    }
  }
  for (std::uint32_t i = 0; i < v.names_.size(); ++i) {
    if (!v.index_.emplace(v.names_[i], i).second) {
      throw DataError("token '" + v.names_[i] + "' collides with another vocabulary token");
    }
  }
  v.attributes_ = std::move(attributes);
  v.entity_names_ = std::move(entity_names);
  v.words_ = std::move(words);
  return v;
}

Ratio AugmentedVocabulary::expansion_ratio() const {
  if (original_count_ == 0) return Ratio{size(), 1};
  const std::size_t d = std::gcd(size(), original_count_);
  return Ratio{size() / d, original_count_ / d};
}

std::optional<TokenId> AugmentedVocabulary::find(std::string_view name) const {
  const auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return TokenId{it->second};
}

TokenId AugmentedVocabulary::token(std::string_view name) const {
  if (auto id = find(name)) return *id;
  throw DataError("token '" + std::string(name) + "' is not in the vocabulary");
}

TokenId AugmentedVocabulary::role_token(std::string_view attribute, int role) const {
  const Attribute* a = this->attribute(attribute);
  if (a == nullptr) throw DataError("unknown attribute '" + std::string(attribute) + "'");
  if (role < 1 || role > a->arity) {
    throw DataError("role " + std::to_string(role) + " out of range for '" + a->name + "'");
  }
  return token(role_token_name(*a, role));
}

std::optional<AugmentedVocabulary::Role> AugmentedVocabulary::role_of(TokenId id) const {
  return roles_.at(id.value);
}

const Attribute* AugmentedVocabulary::attribute(std::string_view name) const {
  const auto it = std::lower_bound(attributes_.begin(), attributes_.end(), name,
                                   [](const Attribute& a, std::string_view n) { return a.name < n; });
  if (it == attributes_.end() || it->name != name) return nullptr;
  return &*it;
}

AugmentedVocabulary read_vocabulary(std::istream& in) {
  std::vector<std::string> entities;
  std::vector<std::string> words;
  std::vector<Attribute> attributes;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string kind;
    if (!(fields >> kind)) continue;
    std::string name;
    if (!(fields >> name)) {
      throw DataError("vocabulary line " + std::to_string(line_no) + ": missing name");
    }
    if (kind == "entity") {
      entities.push_back(name);
    } else if (kind == "word") {
      words.push_back(name);
    } else if (kind == "attr") {
      int arity = 0;
      if (!(fields >> arity)) {
        throw DataError("vocabulary line " + std::to_string(line_no) + ": missing arity");
      }
      attributes.push_back({name, arity});
    } else {
      throw DataError("vocabulary line " + std::to_string(line_no) + ": unknown declaration '" +
                      kind + "'");
    }
    std::string extra;
    if (fields >> extra) {
      throw DataError("vocabulary line " + std::to_string(line_no) + ": trailing '" + extra + "'");
    }
  }
  return AugmentedVocabulary::define(std::move(entities), std::move(attributes), std::move(words));
}

AugmentedVocabulary load_vocabulary(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open vocabulary file '" + path + "'");
  return read_vocabulary(in);
}

void write_vocabulary(std::ostream& out, const AugmentedVocabulary& vocab) {
  for (const auto& n : vocab.entity_names()) out << "entity " << n << '\n';
  for (const auto& w : vocab.words()) out << "word " << w << '\n';
  for (const auto& a : vocab.attributes()) out << "attr " << a.name << ' ' << a.arity << '\n';
}

}  // namespace uri
