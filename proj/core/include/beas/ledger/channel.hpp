#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "beas/ledger/block.hpp"
#include "beas/ledger/identity.hpp"
#include "beas/nn/model.hpp"

namespace beas::ledger {

// Registered participants and their verify keys.
class Membership {
 public:
  void add(const ClientId& id, const VerifyKey& key);
  std::optional<VerifyKey> key_for(const ClientId& id) const;
  std::size_t size() const;

 private:
  mutable std::shared_mutex mu_;
  std::map<ClientId, VerifyKey> keys_;
};

struct Endorsement {
  bool accepted = false;
  std::string reason;  // empty when accepted
};

struct VerifyReport {
  bool ok = true;
  std::size_t blocks_checked = 0;
  std::size_t first_bad = 0;  // meaningful only when !ok
  std::string reason;
};

// Checks hash links, signatures, logical timestamps, payload shapes and merge
// bookkeeping. With a membership registry, creators must also be registered
// under the key they signed with.
VerifyReport verify_blocks(std::span<const Block> chain,
                           const Membership* membership = nullptr);

// Builds and signs a local block proposal for submission.
Block make_local_block(const Identity& creator, const std::string& channel_id,
                       std::uint64_t round, std::uint64_t n_k,
                       const nn::GradientVector& update);

// One federated-learning task: its own append-only chain and world state.
class Channel {
 public:
  Channel(const Channel&) = delete;
  Channel& operator=(const Channel&) = delete;

  const std::string& id() const { return id_; }
  const ChannelDescriptor& descriptor() const { return descriptor_; }
  const nn::ModelSpec& spec() const { return descriptor_.spec; }

  // Endorsement: registered creator, valid signature, matching shape. Safe to
  // call from several client threads at once.
  Endorsement submit_local_block(Block proposal);
  std::size_t pending_count() const;

  // Sorts the queue by (round, creator, submission counter), links and
  // appends. Returns the chain positions of the committed blocks.
  std::vector<std::size_t> order_and_commit();

  // Commits a global block produced by the merge stage. The record must list
  // exactly the local blocks committed since the previous global block.
  std::size_t commit_global(const nn::ModelParams& model, MergeRecord record,
                            const Identity& peer, std::uint64_t round);

  const Block& latest_global() const { return chain_[last_global_]; }
  // World state: the model held by the latest genesis/global block.
  const nn::ModelParams& global_model() const { return global_; }
  std::span<const std::size_t> unmerged_locals() const { return unmerged_; }

  std::size_t length() const { return chain_.size(); }
  const Block& block(std::size_t i) const { return chain_.at(i); }
  std::span<const Block> chain() const { return chain_; }
  Digest head_hash() const { return hashes_.back(); }

  VerifyReport verify_chain() const;

  // Persistence file: "BEAS", u16 version, then one u32-length-prefixed
  // record (canonical encoding + verify key + signature) per block.
  std::vector<std::uint8_t> serialize() const;
  void save(const std::filesystem::path& path) const;
  // Verifies while loading; throws IngestionError on any violation.
  static std::unique_ptr<Channel> deserialize(
      std::span<const std::uint8_t> bytes,
      std::shared_ptr<const Membership> membership = nullptr);
  static std::unique_ptr<Channel> load(
      const std::filesystem::path& path,
      std::shared_ptr<const Membership> membership = nullptr);

 private:
  friend class Network;
  Channel(Block genesis, std::shared_ptr<const Membership> membership);
  void append(Block b);

  std::string id_;
  ChannelDescriptor descriptor_;
  std::shared_ptr<const Membership> membership_;
  std::vector<Block> chain_;
  std::vector<Digest> hashes_;
  nn::ModelParams global_;
  std::size_t last_global_ = 0;
  std::vector<std::size_t> unmerged_;

  struct Pending {
    Block block;
    std::uint64_t counter = 0;
  };
  mutable std::mutex queue_mu_;
  std::vector<Pending> queue_;
  std::uint64_t submissions_ = 0;
};

inline constexpr std::uint16_t kLedgerFormatVersion = 1;

// Parses a persistence file into blocks. A record that cannot be decoded is
// reported through `report` at its index; parsing stops there.
std::vector<Block> parse_ledger(std::span<const std::uint8_t> bytes,
                                VerifyReport& report);
VerifyReport verify_ledger_bytes(std::span<const std::uint8_t> bytes);
VerifyReport verify_ledger_file(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

// Membership service plus the set of channels hosted on one network.
class Network {
 public:
  explicit Network(std::uint64_t seed);

  Identity register_identity();
  const Membership& membership() const { return *membership_; }
  std::shared_ptr<const Membership> membership_ptr() const {
    return membership_;
  }

  // The genesis block is signed by `creator` and carries the descriptor.
  Channel& create_channel(const std::string& channel_id,
                          const ChannelDescriptor& descriptor,
                          const Identity& creator,
                          const nn::ModelParams& genesis_params);
  Channel& channel(const std::string& channel_id);
  bool has_channel(const std::string& channel_id) const {
    return channels_.contains(channel_id);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t registered_ = 0;
  std::shared_ptr<Membership> membership_;
  std::map<std::string, std::unique_ptr<Channel>> channels_;
};

}  // namespace beas::ledger
