#include "beas/ledger/channel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

#include "beas/error.hpp"
#include "beas/rng.hpp"
#include "bytes.hpp"

namespace beas::ledger {

void Membership::add(const ClientId& id, const VerifyKey& key) {
  std::unique_lock lock(mu_);
  keys_[id] = key;
}

std::optional<VerifyKey> Membership::key_for(const ClientId& id) const {
  std::shared_lock lock(mu_);
  auto it = keys_.find(id);
  if (it == keys_.end()) return std::nullopt;
  return it->second;
}

std::size_t Membership::size() const {
  std::shared_lock lock(mu_);
  return keys_.size();
}

namespace {

VerifyReport fail(std::size_t index, std::string reason,
                  std::size_t checked) {
  VerifyReport r;
  r.ok = false;
  r.first_bad = index;
  r.reason = std::move(reason);
  r.blocks_checked = checked;
  return r;
}

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(),
                     [](double x) { return std::isfinite(x); });
}

// Shape checks shared by endorsement and verification. Empty on success.
std::string check_payload(const Block& b, const nn::ModelSpec& spec) {
  if (b.payload.size() != spec.parameter_count()) {
    return "payload length " + std::to_string(b.payload.size()) +
           " != model parameter count " +
           std::to_string(spec.parameter_count());
  }
  if (!all_finite(b.payload)) return "payload holds non-finite values";
  return {};
}

}  // namespace

VerifyReport verify_blocks(std::span<const Block> chain,
                           const Membership* membership) {
  if (chain.empty()) return fail(0, "chain is empty", 0);
  const Block& genesis = chain.front();
  if (genesis.type != BlockType::kGenesis) {
    return fail(0, "first block is not a genesis block", 0);
  }
  const auto* desc = genesis.descriptor();
  if (desc == nullptr) return fail(0, "genesis carries no channel descriptor", 0);
  try {
    desc->spec.validate();
  } catch (const Error& e) {
    return fail(0, e.what(), 0);
  }

  std::vector<std::size_t> unmerged;
  Digest prev_hash{};
  for (std::size_t i = 0; i < chain.size(); ++i) {
    const Block& b = chain[i];
    if (i > 0 && b.type == BlockType::kGenesis) {
      return fail(i, "genesis block after position 0", i);
    }
    if (b.parent_hash != prev_hash) return fail(i, "parent hash mismatch", i);
    if (b.timestamp != i) return fail(i, "logical timestamp out of sequence", i);
    if (b.channel_id != genesis.channel_id) {
      return fail(i, "channel id differs from genesis", i);
    }
    if (!b.signature_valid()) return fail(i, "invalid creator signature", i);
    if (membership != nullptr) {
      auto key = membership->key_for(b.creator);
      if (!key || *key != b.creator_key) {
        return fail(i, "creator not registered under this key", i);
      }
    }
    if (auto err = check_payload(b, desc->spec); !err.empty()) {
      return fail(i, err, i);
    }
    switch (b.type) {
      case BlockType::kGenesis:
        break;
      case BlockType::kLocal:
        if (b.n_k < 1) return fail(i, "local block with n_k = 0", i);
        if (!std::holds_alternative<std::monostate>(b.meta)) {
          return fail(i, "local block carries metadata", i);
        }
        unmerged.push_back(i);
        break;
      case BlockType::kGlobal: {
        const auto* rec = b.merge_record();
        if (rec == nullptr) return fail(i, "global block lacks merge record", i);
        if (rec->entries.size() != unmerged.size()) {
          return fail(i, "merge record does not cover queued local blocks", i);
        }
        for (std::size_t k = 0; k < unmerged.size(); ++k) {
          const auto& e = rec->entries[k];
          const auto& local = chain[unmerged[k]];
          if (e.block_index != unmerged[k] || e.client != local.creator ||
              e.round != local.round) {
            return fail(i, "merge record references the wrong local block", i);
          }
        }
        unmerged.clear();
        break;
      }
    }
    prev_hash = b.hash();
  }
  VerifyReport ok;
  ok.blocks_checked = chain.size();
  return ok;
}

Block make_local_block(const Identity& creator, const std::string& channel_id,
                       std::uint64_t round, std::uint64_t n_k,
                       const nn::GradientVector& update) {
  Block b;
  b.type = BlockType::kLocal;
  b.channel_id = channel_id;
  b.round = round;
  b.n_k = n_k;
  b.payload.assign(update.values().begin(), update.values().end());
  b.sign_with(creator);
  return b;
}

Channel::Channel(Block genesis, std::shared_ptr<const Membership> membership)
    : id_(genesis.channel_id), membership_(std::move(membership)) {
  const auto* desc = genesis.descriptor();
  if (desc == nullptr) throw InvalidInput("genesis lacks a channel descriptor");
  descriptor_ = *desc;
  global_ = nn::ModelParams(descriptor_.spec, genesis.payload);
  hashes_.push_back(genesis.hash());
  chain_.push_back(std::move(genesis));
  last_global_ = 0;
}

void Channel::append(Block b) {
  b.parent_hash = hashes_.back();
  b.timestamp = chain_.size();
  const std::size_t index = chain_.size();
  if (b.type == BlockType::kLocal) {
    unmerged_.push_back(index);
  } else {
    global_ = nn::ModelParams(descriptor_.spec, b.payload);
    last_global_ = index;
    unmerged_.clear();
  }
  hashes_.push_back(b.hash());
  chain_.push_back(std::move(b));
}

Endorsement Channel::submit_local_block(Block proposal) {
  auto reject = [](std::string why) { return Endorsement{false, std::move(why)}; };
  if (proposal.type != BlockType::kLocal) return reject("not a local block");
  if (proposal.channel_id != id_) return reject("wrong channel id");
  if (membership_ != nullptr) {
    auto key = membership_->key_for(proposal.creator);
    if (!key) return reject("unknown creator " + proposal.creator.short_hex());
    if (*key != proposal.creator_key) {
      return reject("creator key does not match registry");
    }
  }
  if (!proposal.signature_valid()) return reject("bad signature");
  if (auto err = check_payload(proposal, descriptor_.spec); !err.empty()) {
    return reject(err);
  }
  if (proposal.n_k < 1) return reject("n_k must be >= 1");
  if (!std::holds_alternative<std::monostate>(proposal.meta)) {
    return reject("local block carries metadata");
  }

  std::lock_guard lock(queue_mu_);
  queue_.push_back(Pending{std::move(proposal), submissions_++});
  return {true, {}};
}

std::size_t Channel::pending_count() const {
  std::lock_guard lock(queue_mu_);
  return queue_.size();
}

std::vector<std::size_t> Channel::order_and_commit() {
  std::vector<Pending> batch;
  {
    std::lock_guard lock(queue_mu_);
    batch.swap(queue_);
  }
  std::sort(batch.begin(), batch.end(), [](const Pending& a, const Pending& b) {
    if (a.block.round != b.block.round) return a.block.round < b.block.round;
    if (a.block.creator != b.block.creator) {
      return a.block.creator < b.block.creator;
    }
    return a.counter < b.counter;
  });
  std::vector<std::size_t> committed;
  committed.reserve(batch.size());
  for (auto& p : batch) {
    committed.push_back(chain_.size());
    append(std::move(p.block));
  }
  return committed;
}

std::size_t Channel::commit_global(const nn::ModelParams& model,
                                   MergeRecord record, const Identity& peer,
                                   std::uint64_t round) {
  if (model.spec() != descriptor_.spec) {
    throw InvalidInput("global model does not match channel spec");
  }
  if (record.entries.size() != unmerged_.size()) {
    throw InvalidInput("merge record must cover every queued local block");
  }
  for (std::size_t k = 0; k < unmerged_.size(); ++k) {
    if (record.entries[k].block_index != unmerged_[k]) {
      throw InvalidInput("merge record out of order with queued local blocks");
    }
  }
  Block b;
  b.type = BlockType::kGlobal;
  b.channel_id = id_;
  b.round = round;
  b.payload.assign(model.values().begin(), model.values().end());
  b.meta = std::move(record);
  b.sign_with(peer);
  const std::size_t index = chain_.size();
  append(std::move(b));
  return index;
}

VerifyReport Channel::verify_chain() const {
  return verify_blocks(chain_, membership_.get());
}

std::vector<std::uint8_t> Channel::serialize() const {
  detail::ByteWriter w;
  w.bytes(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>("BEAS"), 4));
  w.u16(kLedgerFormatVersion);
  for (const auto& b : chain_) {
    const auto rec = b.to_record();
    w.u32(static_cast<std::uint32_t>(rec.size()));
    w.bytes(rec);
  }
  return w.take();
}

void Channel::save(const std::filesystem::path& path) const {
  const auto bytes = serialize();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open ledger file for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing ledger file: " + path.string());
}

std::vector<Block> parse_ledger(std::span<const std::uint8_t> bytes,
                                VerifyReport& report) {
  report = VerifyReport{};
  std::vector<Block> blocks;
  detail::ByteReader r(bytes);
  try {
    auto magic = r.bytes(4);
    if (!std::equal(magic.begin(), magic.end(), "BEAS")) {
      report = fail(0, "bad magic", 0);
      return blocks;
    }
    if (r.u16() != kLedgerFormatVersion) {
      report = fail(0, "unsupported format version", 0);
      return blocks;
    }
  } catch (const IngestionError&) {
    report = fail(0, "truncated header", 0);
    return blocks;
  }
  while (r.remaining() > 0) {
    const std::size_t index = blocks.size();
    try {
      const auto len = r.u32();
      blocks.push_back(Block::from_record(r.bytes(len)));
    } catch (const IngestionError& e) {
      report = fail(index, std::string("undecodable record: ") + e.what(),
                    index);
      return blocks;
    }
  }
  report.blocks_checked = blocks.size();
  return blocks;
}

VerifyReport verify_ledger_bytes(std::span<const std::uint8_t> bytes) {
  VerifyReport parse_report;
  auto blocks = parse_ledger(bytes, parse_report);
  // A record that fails to decode is still preceded by decodable blocks whose
  // own violations come first.
  auto report = blocks.empty() ? VerifyReport{} : verify_blocks(blocks);
  if (!blocks.empty() && !report.ok) return report;
  if (!parse_report.ok) return parse_report;
  if (blocks.empty()) return fail(0, "ledger holds no blocks", 0);
  return report;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot open file: " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

VerifyReport verify_ledger_file(const std::filesystem::path& path) {
  return verify_ledger_bytes(read_file_bytes(path));
}

std::unique_ptr<Channel> Channel::deserialize(
    std::span<const std::uint8_t> bytes,
    std::shared_ptr<const Membership> membership) {
  VerifyReport parse_report;
  auto blocks = parse_ledger(bytes, parse_report);
  if (!parse_report.ok) {
    throw IngestionError("ledger record " +
                         std::to_string(parse_report.first_bad) + ": " +
                         parse_report.reason);
  }
  auto report = verify_blocks(blocks, membership.get());
  if (!report.ok) {
    throw IngestionError("ledger block " + std::to_string(report.first_bad) +
                         ": " + report.reason);
  }
  std::unique_ptr<Channel> ch(new Channel(blocks.front(), std::move(membership)));
  for (std::size_t i = 1; i < blocks.size(); ++i) ch->append(std::move(blocks[i]));
  return ch;
}

std::unique_ptr<Channel> Channel::load(
    const std::filesystem::path& path,
    std::shared_ptr<const Membership> membership) {
  return deserialize(read_file_bytes(path), std::move(membership));
}

Network::Network(std::uint64_t seed)
    : seed_(seed), membership_(std::make_shared<Membership>()) {}

Identity Network::register_identity() {
  std::array<std::uint8_t, 32> key_seed{};
  for (std::size_t w = 0; w < 4; ++w) {
    const auto word = derive_seed(seed_, registered_ * 4 + w);
    for (std::size_t b = 0; b < 8; ++b) {
      key_seed[w * 8 + b] = static_cast<std::uint8_t>(word >> (8 * b));
    }
  }
  ++registered_;
  auto id = Identity::from_seed(key_seed);
  membership_->add(id.id(), id.verify_key());
  return id;
}

Channel& Network::create_channel(const std::string& channel_id,
                                 const ChannelDescriptor& descriptor,
                                 const Identity& creator,
                                 const nn::ModelParams& genesis_params) {
  if (channels_.contains(channel_id)) {
    throw InvalidInput("channel '" + channel_id + "' already exists");
  }
  auto key = membership_->key_for(creator.id());
  if (!key || *key != creator.verify_key()) {
    throw InvalidInput("channel creator is not registered");
  }
  if (genesis_params.spec() != descriptor.spec) {
    throw InvalidInput("genesis params do not match the channel model spec");
  }
  Block g;
  g.type = BlockType::kGenesis;
  g.channel_id = channel_id;
  g.payload.assign(genesis_params.values().begin(),
                   genesis_params.values().end());
  g.meta = descriptor;
  g.sign_with(creator);
  std::unique_ptr<Channel> ch(new Channel(std::move(g), membership_));
  auto& ref = *ch;
  channels_.emplace(channel_id, std::move(ch));
  return ref;
}

Channel& Network::channel(const std::string& channel_id) {
  auto it = channels_.find(channel_id);
  if (it == channels_.end()) {
    throw InvalidInput("no channel '" + channel_id + "'");
  }
  return *it->second;
}

}  // namespace beas::ledger
