#include "uri/codec.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "uri/error.hpp"

namespace uri {

IntegracodedSequence::IntegracodedSequence(VocabularyPtr vocab, std::size_t h)
    : vocab_(std::move(vocab)), h_(h) {
  if (!vocab_) throw ConfigError("sequence needs a vocabulary");
  if (h_ < 1) throw ConfigError("block size h must be >= 1");
}

void IntegracodedSequence::append_block(TokenId head) {
  if (!vocab_->is_original(head)) {
    throw DataError("slot-1 token '" + vocab_->name(head) + "' is not an original token");
  }
  blocks_.push_back(Block{head, std::vector<Slot>(h_ - 1)});
}

bool IntegracodedSequence::add_token(std::size_t block, TokenId token, Provenance provenance) {
  if (token.value >= vocab_->size()) throw DataError("token id out of vocabulary range");
  auto& slots = blocks_.at(block).slots;
  for (auto& slot : slots) {
    if (!slot.token) {
      slot = Slot{token, provenance};
      return false;
    }
  }
  slots.push_back(Slot{token, provenance});
  return true;
}

void IntegracodedSequence::set_slots(std::size_t block, std::vector<Slot> slots) {
  for (const auto& s : slots) {
    if (s.token && s.token->value >= vocab_->size()) throw DataError("token id out of vocabulary range");
  }
  if (slots.size() < h_ - 1) slots.resize(h_ - 1);
  blocks_.at(block).slots = std::move(slots);
}

bool IntegracodedSequence::contains(std::size_t block, TokenId token) const {
  const Block& b = blocks_.at(block);
  if (b.head == token) return true;
  return std::any_of(b.slots.begin(), b.slots.end(),
                     [&](const Slot& s) { return s.token == token; });
}

std::size_t IntegracodedSequence::slot_count() const {
  std::size_t n = 0;
  for (const auto& b : blocks_) n += 1 + b.slots.size();
  return n;
}

bool IntegracodedSequence::well_formed() const {
  return std::all_of(blocks_.begin(), blocks_.end(),
                     [&](const Block& b) { return b.slots.size() == h_ - 1; });
}

BitSequence::BitSequence(std::size_t blocks, std::size_t original, std::size_t augmented,
                         std::size_t h)
    : blocks_(blocks),
      original_(original),
      augmented_(augmented),
      h_(h),
      size_(blocks * (original + (h - 1) * augmented)),
      words_((size_ + 63) / 64) {}

std::size_t BitSequence::popcount() const {
  std::size_t n = 0;
  for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

std::size_t BitSequence::head_bit(std::size_t block, TokenId token) const {
  return block * block_stride() + token.value;
}

std::size_t BitSequence::slot_bit(std::size_t block, std::size_t slot, TokenId token) const {
  return block * block_stride() + original_ + (slot - 2) * augmented_ + token.value;
}

BlockPresenceFeatures::BlockPresenceFeatures(std::size_t blocks, std::size_t tokens)
    : blocks_(blocks),
      tokens_(tokens),
      row_words_((tokens + 63) / 64),
      bits_(blocks * ((tokens + 63) / 64)) {}

std::vector<TokenId> BlockPresenceFeatures::active(std::size_t block) const {
  std::vector<TokenId> out;
  const auto r = row(block);
  for (std::size_t w = 0; w < r.size(); ++w) {
    for (kernels::Word bits = r[w]; bits != 0; bits &= bits - 1) {
      out.push_back(TokenId{static_cast<std::uint32_t>(w * 64 + std::countr_zero(bits))});
    }
  }
  return out;
}

BlockPresenceFeatures BlockPresenceFeatures::without(std::span<const TokenId> tokens) const {
  BlockPresenceFeatures out = *this;
  for (std::size_t b = 0; b < blocks_; ++b) {
    for (TokenId t : tokens) out.reset(b, t);
  }
  return out;
}

namespace {

// Atoms in fixed identification order: attribute name, then argument positions.
std::vector<const GroundAtom*> ordered_atoms(const Scene& scene) {
  std::vector<const GroundAtom*> atoms;
  for (const auto& a : scene.atoms()) atoms.push_back(&a);
  auto key = [&](const GroundAtom* a) {
    std::vector<std::size_t> pos;
    for (EntityId e : a->args) pos.push_back(scene.entity(e).position);
    return std::pair{a->attribute, pos};
  };
  std::stable_sort(atoms.begin(), atoms.end(),
                   [&](const GroundAtom* a, const GroundAtom* b) { return key(a) < key(b); });
  return atoms;
}

TokenId role_token_for(const AugmentedVocabulary& vocab, const GroundAtom& atom, int role) {
  const Attribute* attr = vocab.attribute(atom.attribute);
  if (attr == nullptr) throw DataError("atom uses unknown attribute '" + atom.attribute + "'");
  if (static_cast<std::size_t>(attr->arity) != atom.args.size()) {
    throw DataError("atom '" + atom.attribute + "' has " + std::to_string(atom.args.size()) +
                    " arguments, attribute arity is " + std::to_string(attr->arity));
  }
  return vocab.role_token(attr->name, role);
}

TokenId head_token(const Scene& scene, const AugmentedVocabulary& vocab, std::size_t block) {
  const std::string& word = scene.word_at(block);
  if (word.empty()) throw DataError("block " + std::to_string(block) + " has no slot-1 word");
  const TokenId id = vocab.token(word);
  if (!vocab.is_original(id)) {
    throw DataError("slot-1 word '" + word + "' is not an original token");
  }
  if (scene.entity_at(block) && !vocab.is_entity(id)) {
    throw DataError("entity '" + word + "' is not declared as an entity token");
  }
  return id;
}

}  // namespace

std::size_t required_block_size(const Scene& scene) {
  std::vector<std::size_t> roles(scene.blocks(), 0);
  for (const auto& atom : scene.atoms()) {
    for (EntityId e : atom.args) ++roles[scene.entity(e).position];
  }
  return 1 + (roles.empty() ? 0 : *std::max_element(roles.begin(), roles.end()));
}

IntegracodedSequence encode_scene(const Scene& scene, std::size_t h, VocabularyPtr vocab) {
  IntegracodedSequence seq(vocab, h);
  for (std::size_t b = 0; b < scene.blocks(); ++b) seq.append_block(head_token(scene, *vocab, b));
  for (const GroundAtom* atom : ordered_atoms(scene)) {
    for (std::size_t p = 0; p < atom->args.size(); ++p) {
      const std::size_t block = scene.entity(atom->args[p]).position;
      const TokenId tok = role_token_for(*vocab, *atom, static_cast<int>(p + 1));
      if (seq.add_token(block, tok)) {
        throw DataError("block " + std::to_string(block) + " (" + scene.word_at(block) +
                        ") overflows: needs block size " +
                        std::to_string(required_block_size(scene)) + ", h=" + std::to_string(h));
      }
    }
  }
  return seq;
}

BitSequence to_bit_sequence(const IntegracodedSequence& seq) {
  if (!seq.well_formed()) {
    throw DataError("bit sequence needs every block to have exactly h slots");
  }
  const auto& v = seq.vocab();
  BitSequence bits(seq.size(), v.original_size(), v.size(), seq.h());
  for (std::size_t p = 0; p < seq.size(); ++p) {
    const Block& b = seq.block(p);
    bits.set(bits.head_bit(p, b.head));
    for (std::size_t s = 0; s < b.slots.size(); ++s) {
      if (b.slots[s].token) bits.set(bits.slot_bit(p, s + 2, *b.slots[s].token));
    }
  }
  return bits;
}

BlockPresenceFeatures to_block_presence(const IntegracodedSequence& seq) {
  BlockPresenceFeatures f(seq.size(), seq.vocab().size());
  for (std::size_t p = 0; p < seq.size(); ++p) {
    const Block& b = seq.block(p);
    f.set(p, b.head);
    for (const auto& s : b.slots) {
      if (s.token) f.set(p, *s.token);
    }
  }
  return f;
}

BlockPresenceFeatures scene_presence(const Scene& scene, const AugmentedVocabulary& vocab) {
  BlockPresenceFeatures f(scene.blocks(), vocab.size());
  for (std::size_t b = 0; b < scene.blocks(); ++b) f.set(b, head_token(scene, vocab, b));
  for (const auto& atom : scene.atoms()) {
    for (std::size_t p = 0; p < atom.args.size(); ++p) {
      f.set(scene.entity(atom.args[p]).position,
            role_token_for(vocab, atom, static_cast<int>(p + 1)));
    }
  }
  return f;
}

namespace {

constexpr std::size_t kMaxPairings = 5040;

// Enumerates pairings of role occurrences into atoms. `lists[p]` holds the
// entity of every A^(p+1) occurrence; all lists have equal length.
std::vector<std::vector<GroundAtom>> enumerate_pairings(
    const std::string& attribute, const std::vector<std::vector<EntityId>>& lists,
    bool& truncated) {
  const std::size_t count = lists.front().size();
  std::set<std::vector<GroundAtom>> out;
  std::vector<std::vector<EntityId>> perm(lists.begin(), lists.end());
  for (std::size_t p = 1; p < perm.size(); ++p) std::sort(perm[p].begin(), perm[p].end());
  std::size_t visited = 0;
  // Odometer over permutations of roles 2..r.
  while (true) {
    if (++visited > kMaxPairings) {
      truncated = true;
      break;
    }
    std::set<GroundAtom> atoms;
    for (std::size_t i = 0; i < count; ++i) {
      GroundAtom a{attribute, {}};
      for (const auto& role : perm) a.args.push_back(role[i]);
      atoms.insert(std::move(a));
    }
    if (atoms.size() == count) out.emplace(atoms.begin(), atoms.end());
    std::size_t p = 1;
    for (; p < perm.size(); ++p) {
      if (std::next_permutation(perm[p].begin(), perm[p].end())) break;
    }
    if (p == perm.size()) break;
  }
  return {out.begin(), out.end()};
}

}  // namespace

DecodedScene decode_sequence(const IntegracodedSequence& seq) {
  const auto& vocab = seq.vocab();
  DecodedScene result{Scene(seq.size()), {}};
  Scene& scene = result.scene;
  for (std::size_t p = 0; p < seq.size(); ++p) {
    const Block& b = seq.block(p);
    const bool has_roles =
        std::any_of(b.slots.begin(), b.slots.end(), [&](const Slot& s) {
          return s.token && vocab.role_of(*s.token).has_value();
        });
    if (vocab.is_entity(b.head) || has_roles) {
      scene.add_entity(vocab.name(b.head), p);
    } else {
      scene.set_word(p, vocab.name(b.head));
    }
  }
  const auto attrs = vocab.attributes();
  // occurrences[attr][role-1] = entity per occurrence, in block order
  std::vector<std::vector<std::vector<EntityId>>> occurrences(attrs.size());
  for (std::size_t a = 0; a < attrs.size(); ++a) {
    occurrences[a].resize(static_cast<std::size_t>(attrs[a].arity));
  }
  for (std::size_t p = 0; p < seq.size(); ++p) {
    for (const auto& s : seq.block(p).slots) {
      if (!s.token) continue;
      if (auto role = vocab.role_of(*s.token)) {
        occurrences[role->attribute][static_cast<std::size_t>(role->role - 1)].push_back(
            *scene.entity_at(p));
      }
    }
  }
  for (std::size_t a = 0; a < attrs.size(); ++a) {
    const auto& lists = occurrences[a];
    std::vector<std::size_t> counts;
    for (const auto& l : lists) counts.push_back(l.size());
    if (std::all_of(counts.begin(), counts.end(), [](std::size_t c) { return c == 0; })) continue;
    if (lists.size() == 1) {
      for (EntityId e : lists[0]) scene.add_atom(attrs[a].name, {e});
      continue;
    }
    if (std::adjacent_find(counts.begin(), counts.end(), std::not_equal_to<>()) != counts.end()) {
      result.report.incomplete.push_back({attrs[a].name, counts});
      continue;
    }
    bool truncated = false;
    auto candidates = enumerate_pairings(attrs[a].name, lists, truncated);
    if (candidates.size() == 1 && !truncated) {
      for (auto& atom : candidates.front()) scene.add_atom(std::move(atom));
    } else if (candidates.empty()) {
      result.report.incomplete.push_back({attrs[a].name, counts});
    } else {
      result.report.ambiguous.push_back({attrs[a].name, std::move(candidates), truncated});
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Files

void write_sequence(std::ostream& out, const IntegracodedSequence& seq) {
  const auto& v = seq.vocab();
  out << "# h=" << seq.h() << '\n';
  for (const auto& b : seq.blocks()) {
    out << v.name(b.head);
    for (const auto& s : b.slots) {
      out << '\t';
      if (!s.token) {
        out << '_';
      } else {
        out << v.name(*s.token);
        if (s.provenance == Provenance::predicted) out << '*';
      }
    }
    out << '\n';
  }
}

std::vector<IntegracodedSequence> read_sequences(std::istream& in, VocabularyPtr vocab) {
  std::vector<IntegracodedSequence> out;
  std::vector<std::vector<std::string>> rows;
  std::optional<std::size_t> h;
  std::size_t line_no = 0;
  auto flush = [&] {
    if (rows.empty()) return;
    std::size_t width = h.value_or(0);
    if (!h) {
      for (const auto& r : rows) width = std::max(width, r.size());
    }
    IntegracodedSequence seq(vocab, width);
    for (std::size_t p = 0; p < rows.size(); ++p) {
      const auto& r = rows[p];
      seq.append_block(vocab->token(r[0]));
      std::vector<Slot> slots;
      for (std::size_t c = 1; c < r.size(); ++c) {
        std::string cell = r[c];
        if (cell == "_") {
          slots.emplace_back();
          continue;
        }
        Provenance prov = Provenance::given;
        if (!cell.empty() && cell.back() == '*') {
          prov = Provenance::predicted;
          cell.pop_back();
        }
        slots.push_back(Slot{vocab->token(cell), prov});
      }
      seq.set_slots(p, std::move(slots));
    }
    out.push_back(std::move(seq));
    rows.clear();
    h.reset();
  };
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush();
      continue;
    }
    if (line[0] == '#') {
      const auto pos = line.find("h=");
      if (pos != std::string::npos) {
        if (!rows.empty()) flush();
        try {
          h = std::stoul(line.substr(pos + 2));
        } catch (const std::exception&) {
          throw DataError("sequence line " + std::to_string(line_no) + ": bad h header");
        }
        if (*h < 1) throw DataError("sequence header h must be >= 1");
      }
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, '\t')) cells.push_back(cell);
    if (cells.empty() || cells[0].empty()) {
      throw DataError("sequence line " + std::to_string(line_no) + ": missing slot-1 token");
    }
    rows.push_back(std::move(cells));
  }
  flush();
  return out;
}

void write_scene(std::ostream& out, const Scene& scene) {
  out << "N " << scene.blocks();
  for (std::size_t i = 0; i < scene.entities().size(); ++i) {
    out << "; E " << i << ' ' << scene.entities()[i].name << ' ' << scene.entities()[i].position;
  }
  for (std::size_t b = 0; b < scene.blocks(); ++b) {
    if (!scene.entity_at(b) && !scene.word_at(b).empty()) {
      out << "; W " << b << ' ' << scene.word_at(b);
    }
  }
  for (const auto& atom : scene.atoms()) {
    out << "; A " << atom.attribute;
    for (EntityId e : atom.args) out << ' ' << e;
  }
  out << '\n';
}

Scene parse_scene_record(std::string_view line) {
  std::vector<std::string> entries;
  {
    std::string cur;
    for (char c : line) {
      if (c == ';') {
        entries.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    entries.push_back(cur);
  }
  std::optional<std::size_t> blocks;
  struct PendingEntity {
    long id;
    std::string name;
    std::size_t pos;
  };
  std::vector<PendingEntity> ents;
  std::vector<std::pair<std::size_t, std::string>> words;
  std::vector<std::pair<std::string, std::vector<long>>> atoms;
  for (const auto& entry : entries) {
    std::istringstream f(entry);
    std::string kind;
    if (!(f >> kind)) continue;
    if (kind == "N") {
      std::size_t n = 0;
      if (!(f >> n)) throw DataError("scene record: bad N entry");
      blocks = n;
    } else if (kind == "E") {
      PendingEntity e{};
      if (!(f >> e.id >> e.name >> e.pos)) throw DataError("scene record: bad E entry '" + entry + "'");
      ents.push_back(e);
    } else if (kind == "W") {
      std::size_t pos = 0;
      std::string w;
      if (!(f >> pos >> w)) throw DataError("scene record: bad W entry '" + entry + "'");
      words.emplace_back(pos, w);
    } else if (kind == "A") {
      std::string attr;
      if (!(f >> attr)) throw DataError("scene record: bad A entry '" + entry + "'");
      std::vector<long> ids;
      long id = 0;
      while (f >> id) ids.push_back(id);
      atoms.emplace_back(attr, ids);
    } else {
      throw DataError("scene record: unknown entry kind '" + kind + "'");
    }
  }
  if (!blocks) {
    std::size_t n = 0;
    for (const auto& e : ents) n = std::max(n, e.pos + 1);
    for (const auto& w : words) n = std::max(n, w.first + 1);
    blocks = n;
  }
  Scene scene(*blocks);
  std::map<long, EntityId> ids;
  for (const auto& e : ents) {
    if (ids.contains(e.id)) throw DataError("scene record: duplicate entity id " + std::to_string(e.id));
    ids[e.id] = scene.add_entity(e.name, e.pos);
  }
  for (const auto& [pos, w] : words) scene.set_word(pos, w);
  for (const auto& [attr, raw] : atoms) {
    GroundAtom a{attr, {}};
    for (long id : raw) {
      const auto it = ids.find(id);
      if (it == ids.end()) throw DataError("scene record: atom references unknown entity " + std::to_string(id));
      a.args.push_back(it->second);
    }
    scene.add_atom(std::move(a));
  }
  return scene;
}

std::vector<Scene> read_scene_dataset(std::istream& in) {
  std::vector<Scene> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    out.push_back(parse_scene_record(line));
  }
  return out;
}

std::vector<Scene> load_scene_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scene dataset '" + path + "'");
  return read_scene_dataset(in);
}

}  // namespace uri
