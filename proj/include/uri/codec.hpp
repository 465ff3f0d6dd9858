#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uri/kernels.hpp"
#include "uri/scene.hpp"
#include "uri/vocabulary.hpp"

namespace uri {

using VocabularyPtr = std::shared_ptr<const AugmentedVocabulary>;

enum class Provenance : std::uint8_t { given, predicted };

struct Slot {
  std::optional<TokenId> token;
  Provenance provenance = Provenance::given;

  friend bool operator==(const Slot&, const Slot&) = default;
};

/// One integracode block: the original token followed by augmenting slots.
struct Block {
  TokenId head;
  std::vector<Slot> slots;

  friend bool operator==(const Block&, const Block&) = default;
};

/// N blocks of nominal size h over an augmented vocabulary.
class IntegracodedSequence {
 public:
  IntegracodedSequence(VocabularyPtr vocab, std::size_t h);

  const AugmentedVocabulary& vocab() const { return *vocab_; }
  const VocabularyPtr& vocab_ptr() const { return vocab_; }
  std::size_t h() const { return h_; }
  std::size_t size() const { return blocks_.size(); }
  std::span<const Block> blocks() const { return blocks_; }
  const Block& block(std::size_t i) const { return blocks_.at(i); }

  /// Appends a block with h-1 empty slots.
  void append_block(TokenId head);
  /// Puts the token in the first empty slot, growing the block past h when
  /// none is free. Returns true iff the block had to grow.
  bool add_token(std::size_t block, TokenId token, Provenance provenance = Provenance::given);
  /// Replaces a block's augmenting slots; shorter lists are padded to h-1.
  void set_slots(std::size_t block, std::vector<Slot> slots);
  bool contains(std::size_t block, TokenId token) const;
  /// Total slot count including heads; h*N for a well-formed sequence.
  std::size_t slot_count() const;
  /// Every block has exactly h-1 augmenting slots.
  bool well_formed() const;

  friend bool operator==(const IntegracodedSequence& a, const IntegracodedSequence& b) {
    return a.h_ == b.h_ && a.blocks_ == b.blocks_ && *a.vocab_ == *b.vocab_;
  }

 private:
  VocabularyPtr vocab_;
  std::size_t h_;
  std::vector<Block> blocks_;
};

/// The slotted Boolean view: per block |V| head bits then h-1 groups of |V'| bits.
class BitSequence {
 public:
  BitSequence(std::size_t blocks, std::size_t original, std::size_t augmented, std::size_t h);

  std::size_t size() const { return size_; }
  std::size_t block_stride() const { return original_ + (h_ - 1) * augmented_; }
  bool test(std::size_t bit) const { return (words_[bit / 64] >> (bit % 64)) & 1U; }
  void set(std::size_t bit) { words_[bit / 64] |= kernels::Word{1} << (bit % 64); }
  std::size_t popcount() const;
  /// Bit index of head token `token` in `block`.
  std::size_t head_bit(std::size_t block, TokenId token) const;
  /// Bit index of `token` in augmenting slot `slot` (2..h) of `block`.
  std::size_t slot_bit(std::size_t block, std::size_t slot, TokenId token) const;

 private:
  std::size_t blocks_;
  std::size_t original_;
  std::size_t augmented_;
  std::size_t h_;
  std::size_t size_;
  std::vector<kernels::Word> words_;
};

/// Slot-collapsed view: presence[p][t] iff token t appears anywhere in block p.
class BlockPresenceFeatures {
 public:
  BlockPresenceFeatures() = default;
  BlockPresenceFeatures(std::size_t blocks, std::size_t tokens);

  std::size_t blocks() const { return blocks_; }
  std::size_t tokens() const { return tokens_; }
  bool test(std::size_t block, TokenId token) const {
    return (bits_[block * row_words_ + token.value / 64] >> (token.value % 64)) & 1U;
  }
  void set(std::size_t block, TokenId token) {
    bits_[block * row_words_ + token.value / 64] |= kernels::Word{1} << (token.value % 64);
  }
  void reset(std::size_t block, TokenId token) {
    bits_[block * row_words_ + token.value / 64] &= ~(kernels::Word{1} << (token.value % 64));
  }
  std::span<const kernels::Word> row(std::size_t block) const {
    return {bits_.data() + block * row_words_, row_words_};
  }
  /// Tokens present in `block`, ascending.
  std::vector<TokenId> active(std::size_t block) const;
  /// Copy with the given tokens cleared in every block.
  BlockPresenceFeatures without(std::span<const TokenId> tokens) const;

  friend bool operator==(const BlockPresenceFeatures&, const BlockPresenceFeatures&) = default;

 private:
  std::size_t blocks_ = 0;
  std::size_t tokens_ = 0;
  std::size_t row_words_ = 0;
  std::vector<kernels::Word> bits_;
};

/// Throws DataError on overflow (naming the block) or unknown tokens.
IntegracodedSequence encode_scene(const Scene& scene, std::size_t h, VocabularyPtr vocab);

/// Smallest h that encodes the scene without overflow.
std::size_t required_block_size(const Scene& scene);

BitSequence to_bit_sequence(const IntegracodedSequence& seq);
BlockPresenceFeatures to_block_presence(const IntegracodedSequence& seq);
/// Presence grid straight from a scene (same result as encoding with a large h).
BlockPresenceFeatures scene_presence(const Scene& scene, const AugmentedVocabulary& vocab);

struct AmbiguousRelation {
  std::string attribute;
  /// Each candidate is one full pairing of the attribute's role tokens.
  std::vector<std::vector<GroundAtom>> candidates;
  bool truncated = false;
};

struct IncompleteRelation {
  std::string attribute;
  std::vector<std::size_t> role_counts;  // occurrences of A^1..A^r
};

struct AmbiguityReport {
  std::vector<AmbiguousRelation> ambiguous;
  std::vector<IncompleteRelation> incomplete;

  bool empty() const { return ambiguous.empty() && incomplete.empty(); }
};

struct DecodedScene {
  Scene scene;
  AmbiguityReport report;
};

/// Recovers entities and role placements; pairs role tokens into atoms when
/// the pairing is unique and reports the rest.
DecodedScene decode_sequence(const IntegracodedSequence& seq);

// Sequence file: `# h=<h>` header, one block per line, tab-separated slots,
// `_` for an empty slot, `*` suffix for predicted tokens. Sequences in one
// file are separated by a blank line.
void write_sequence(std::ostream& out, const IntegracodedSequence& seq);
std::vector<IntegracodedSequence> read_sequences(std::istream& in, VocabularyPtr vocab);

// Scene dataset file: one scene per line, entries separated by `;`:
// `N <blocks>`, `E <id> <name> <pos>`, `W <pos> <word>`, `A <attr> <id>...`.
void write_scene(std::ostream& out, const Scene& scene);
Scene parse_scene_record(std::string_view line);
std::vector<Scene> read_scene_dataset(std::istream& in);
std::vector<Scene> load_scene_dataset(const std::string& path);

}  // namespace uri
