#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace uri {

using EntityId = std::uint32_t;

struct Entity {
  std::string name;
  std::size_t position = 0;

  friend bool operator==(const Entity&, const Entity&) = default;
};

struct GroundAtom {
  std::string attribute;
  std::vector<EntityId> args;

  friend auto operator<=>(const GroundAtom&, const GroundAtom&) = default;
};

/// A window of `blocks()` positions. Entities occupy distinct blocks; the
/// other blocks carry plain words. Atoms are kept sorted and unique.
class Scene {
 public:
  Scene() = default;
  explicit Scene(std::size_t blocks);

  std::size_t blocks() const { return words_.size(); }

  /// Throws DataError when the block is out of range or already an entity.
  EntityId add_entity(std::string name, std::size_t position);
  /// Word for a non-entity block.
  void set_word(std::size_t block, std::string word);
  /// Set semantics: adding an existing atom is a no-op.
  void add_atom(GroundAtom atom);
  void add_atom(std::string attribute, std::vector<EntityId> args) {
    add_atom(GroundAtom{std::move(attribute), std::move(args)});
  }
  /// Removes every atom of `attribute`; returns how many were removed.
  std::size_t remove_attribute(std::string_view attribute);

  bool contains(const GroundAtom& atom) const;
  std::span<const Entity> entities() const { return entities_; }
  const Entity& entity(EntityId id) const { return entities_.at(id); }
  std::span<const GroundAtom> atoms() const { return atoms_; }
  /// Contiguous range of atoms whose attribute equals `attribute`.
  std::span<const GroundAtom> atoms_of(std::string_view attribute) const;
  std::optional<EntityId> entity_at(std::size_t block) const;
  /// Slot-1 word of a block: the entity name or the plain word ("" if unset).
  const std::string& word_at(std::size_t block) const { return words_.at(block); }

  /// True iff some attribute occurs in more than one atom.
  bool has_repeated_attribute() const;

  /// Same scene with entity ids renumbered in block order.
  Scene canonical() const;

  /// Structural equality up to entity renumbering.
  friend bool operator==(const Scene& a, const Scene& b);

 private:
  std::vector<std::string> words_;
  std::vector<std::optional<EntityId>> occupant_;
  std::vector<Entity> entities_;
  std::vector<GroundAtom> atoms_;
};

std::string to_string(const GroundAtom& atom, const Scene& scene);

}  // namespace uri
