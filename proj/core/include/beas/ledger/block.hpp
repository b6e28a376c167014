#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "beas/client_id.hpp"
#include "beas/dp.hpp"
#include "beas/ledger/identity.hpp"
#include "beas/nn/model.hpp"
#include "beas/robust_aggregation.hpp"

namespace beas::ledger {

enum class BlockType : std::uint8_t { kGenesis = 0, kLocal = 1, kGlobal = 2 };

std::string_view to_string(BlockType t);

// Training parameters fixed at channel creation.
struct Hyperparams {
  std::uint64_t t = 5;  // merge threshold
  std::uint64_t c = 250;  // cluster size
  std::uint64_t epochs = 5;
  double lr = 0.1;
  std::uint64_t batch_size = 32;
  dp::Policy dp;
  agg::DefensePolicy defense;

  bool operator==(const Hyperparams& o) const;
};

// Carried by the genesis block so a persisted channel is self-describing.
struct ChannelDescriptor {
  nn::ModelSpec spec;
  Hyperparams hyperparams;
};

// One consumed local block as recorded in a global block.
struct MergeEntry {
  std::uint64_t block_index = 0;  // chain position of the local block
  ClientId client;
  std::uint64_t round = 0;
  bool selected = true;
  double score = 0.0;      // multi-krum score, 0 when disabled
  double fg_weight = 1.0;  // foolsgold weight, 1 when disabled
  double weight = 0.0;     // normalized averaging weight, 0 if rejected
};

struct MergeRecord {
  std::vector<MergeEntry> entries;
  // True when no selected update carried weight and the previous global was
  // carried forward unchanged.
  bool aborted = false;
};

using BlockMeta = std::variant<std::monostate, ChannelDescriptor, MergeRecord>;

struct Block {
  BlockType type = BlockType::kLocal;
  std::string channel_id;
  std::uint64_t round = 0;
  ClientId creator;
  Digest parent_hash{};
  std::uint64_t n_k = 0;
  // Local: the update delta. Genesis / global: the full model values.
  std::vector<double> payload;
  BlockMeta meta;
  std::uint64_t timestamp = 0;  // logical; equals chain position
  VerifyKey creator_key{};
  Signature signature{};

  // Canonical little-endian encoding, fixed field order: type, channel_id,
  // round, creator, parent_hash, n_k, payload length, payload, meta,
  // timestamp. Hashing covers exactly these bytes.
  std::vector<std::uint8_t> encode() const;
  // The creator-signed bytes: the canonical encoding without the two fields
  // the orderer assigns (parent_hash, timestamp).
  std::vector<std::uint8_t> signing_bytes() const;
  Digest hash() const;

  // Persisted record: canonical encoding, verify key, signature.
  std::vector<std::uint8_t> to_record() const;
  static Block from_record(std::span<const std::uint8_t> record);

  void sign_with(const Identity& identity);
  bool signature_valid() const;

  const MergeRecord* merge_record() const {
    return std::get_if<MergeRecord>(&meta);
  }
  const ChannelDescriptor* descriptor() const {
    return std::get_if<ChannelDescriptor>(&meta);
  }
};

}  // namespace beas::ledger
