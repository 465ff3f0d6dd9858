#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace uri {

/// A relation symbol of fixed arity.
struct Attribute {
  std::string name;
  int arity = 1;

  friend auto operator<=>(const Attribute&, const Attribute&) = default;
};

/// Index into an AugmentedVocabulary. Ids below `original_size()` are the
/// original tokens V; the remainder are augmenting role tokens.
struct TokenId {
  std::uint32_t value = 0;

  friend auto operator<=>(const TokenId&, const TokenId&) = default;
};

struct Ratio {
  std::size_t numerator = 0;
  std::size_t denominator = 1;

  double value() const { return static_cast<double>(numerator) / static_cast<double>(denominator); }
  friend bool operator==(const Ratio&, const Ratio&) = default;
};

/// Spelling of the unary token for argument `role` (1-based) of `attr`:
/// `Insulted^2` for relations, the bare name for arity-1 attributes.
std::string role_token_name(const Attribute& attr, int role);

/// Original tokens V plus the unary decomposition of every attribute.
class AugmentedVocabulary {
 public:
  struct Role {
    std::size_t attribute = 0;  // index into attributes()
    int role = 1;
  };

  AugmentedVocabulary() = default;

  /// Rejects duplicate or malformed names with a DataError naming them.
  static AugmentedVocabulary define(std::vector<std::string> entity_names,
                                    std::vector<Attribute> attributes,
                                    std::vector<std::string> words = {});

  std::size_t original_size() const { return original_count_; }
  std::size_t size() const { return names_.size(); }
  /// g = |V'| / |V|, reduced.
  Ratio expansion_ratio() const;

  const std::string& name(TokenId id) const { return names_.at(id.value); }
  std::optional<TokenId> find(std::string_view name) const;
  /// Throws DataError for unknown names.
  TokenId token(std::string_view name) const;
  TokenId role_token(std::string_view attribute, int role) const;

  bool is_original(TokenId id) const { return id.value < original_count_; }
  bool is_entity(TokenId id) const { return is_original(id) && entity_flag_[id.value]; }
  std::optional<Role> role_of(TokenId id) const;

  std::span<const Attribute> attributes() const { return attributes_; }
  const Attribute* attribute(std::string_view name) const;
  std::span<const std::string> entity_names() const { return entity_names_; }
  std::span<const std::string> words() const { return words_; }
  std::span<const std::string> tokens() const { return names_; }

  friend bool operator==(const AugmentedVocabulary& a, const AugmentedVocabulary& b) {
    return a.names_ == b.names_ && a.attributes_ == b.attributes_ &&
           a.entity_names_ == b.entity_names_;
  }

 private:
  std::vector<std::string> names_;
  std::vector<bool> entity_flag_;
  std::vector<std::optional<Role>> roles_;
  std::map<std::string, std::uint32_t, std::less<>> index_;
  std::vector<Attribute> attributes_;
  std::vector<std::string> entity_names_;
  std::vector<std::string> words_;
  std::size_t original_count_ = 0;
};

/// Line format: `entity <name>`, `word <name>`, `attr <name> <arity>`, `#` comments.
AugmentedVocabulary read_vocabulary(std::istream& in);
AugmentedVocabulary load_vocabulary(const std::string& path);
void write_vocabulary(std::ostream& out, const AugmentedVocabulary& vocab);

/// Names usable as tokens: nonempty, no whitespace, none of `^*(),;#`, not `_`.
bool is_valid_name(std::string_view name);

}  // namespace uri
