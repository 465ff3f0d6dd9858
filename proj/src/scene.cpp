#include "uri/scene.hpp"

#include <algorithm>

#include "uri/error.hpp"

namespace uri {

Scene::Scene(std::size_t blocks) : words_(blocks), occupant_(blocks) {}

EntityId Scene::add_entity(std::string name, std::size_t position) {
  if (position >= blocks()) {
    throw DataError("entity '" + name + "' position " + std::to_string(position) +
                    " outside a scene of " + std::to_string(blocks()) + " blocks");
  }
  if (occupant_[position]) {
    throw DataError("block " + std::to_string(position) + " already holds an entity");
  }
  const auto id = static_cast<EntityId>(entities_.size());
  words_[position] = name;
  occupant_[position] = id;
  entities_.push_back(Entity{std::move(name), position});
  return id;
}

void Scene::set_word(std::size_t block, std::string word) {
  if (block >= blocks()) throw DataError("word block " + std::to_string(block) + " out of range");
  if (occupant_[block]) {
    throw DataError("block " + std::to_string(block) + " holds an entity; cannot set a word");
  }
  words_[block] = std::move(word);
}

void Scene::add_atom(GroundAtom atom) {
  if (atom.args.empty()) throw DataError("atom '" + atom.attribute + "' has no arguments");
  for (EntityId id : atom.args) {
    if (id >= entities_.size()) {
      throw DataError("atom '" + atom.attribute + "' references unknown entity " +
                      std::to_string(id));
    }
  }
  const auto it = std::lower_bound(atoms_.begin(), atoms_.end(), atom);
  if (it != atoms_.end() && *it == atom) return;
  atoms_.insert(it, std::move(atom));
}

std::size_t Scene::remove_attribute(std::string_view attribute) {
  const auto before = atoms_.size();
  std::erase_if(atoms_, [&](const GroundAtom& a) { return a.attribute == attribute; });
  return before - atoms_.size();
}

bool Scene::contains(const GroundAtom& atom) const {
  return std::binary_search(atoms_.begin(), atoms_.end(), atom);
}

std::span<const GroundAtom> Scene::atoms_of(std::string_view attribute) const {
  const auto lo = std::lower_bound(
      atoms_.begin(), atoms_.end(), attribute,
      [](const GroundAtom& a, std::string_view name) { return a.attribute < name; });
  auto hi = lo;
  while (hi != atoms_.end() && hi->attribute == attribute) ++hi;
  return {lo, hi};
}

std::optional<EntityId> Scene::entity_at(std::size_t block) const {
  if (block >= blocks()) return std::nullopt;
  return occupant_[block];
}

bool Scene::has_repeated_attribute() const {
  for (std::size_t i = 1; i < atoms_.size(); ++i) {
    if (atoms_[i].attribute == atoms_[i - 1].attribute) return true;
  }
  return false;
}

Scene Scene::canonical() const {
  Scene out(blocks());
  std::vector<EntityId> remap(entities_.size());
  for (std::size_t b = 0; b < blocks(); ++b) {
    if (occupant_[b]) {
      remap[*occupant_[b]] = out.add_entity(entities_[*occupant_[b]].name, b);
    } else {
      out.words_[b] = words_[b];
    }
  }
  for (const auto& atom : atoms_) {
    GroundAtom mapped{atom.attribute, {}};
    for (EntityId id : atom.args) mapped.args.push_back(remap[id]);
    out.add_atom(std::move(mapped));
  }
  return out;
}

bool operator==(const Scene& a, const Scene& b) {
  const Scene ca = a.canonical();
  const Scene cb = b.canonical();
  return ca.words_ == cb.words_ && ca.entities_ == cb.entities_ && ca.atoms_ == cb.atoms_;
}

std::string to_string(const GroundAtom& atom, const Scene& scene) {
  std::string out = atom.attribute + "(";
  for (std::size_t i = 0; i < atom.args.size(); ++i) {
    if (i) out += ",";
    out += scene.entity(atom.args[i]).name;
  }
  return out + ")";
}

}  // namespace uri
