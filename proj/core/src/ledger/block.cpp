#include "beas/ledger/block.hpp"

#include <algorithm>

#include "bytes.hpp"

namespace beas::ledger {

using detail::ByteReader;
using detail::ByteWriter;

std::string_view to_string(BlockType t) {
  switch (t) {
    case BlockType::kGenesis:
      return "genesis";
    case BlockType::kLocal:
      return "local";
    case BlockType::kGlobal:
      return "global";
  }
  return "unknown";
}

bool Hyperparams::operator==(const Hyperparams& o) const {
  return t == o.t && c == o.c && epochs == o.epochs && lr == o.lr &&
         batch_size == o.batch_size && dp.mode == o.dp.mode &&
         dp.sigma == o.dp.sigma && dp.clip_bound == o.dp.clip_bound &&
         dp.sparsity == o.dp.sparsity &&
         defense.use_multikrum == o.defense.use_multikrum &&
         defense.f == o.defense.f &&
         defense.use_foolsgold == o.defense.use_foolsgold &&
         defense.fg_history_rounds == o.defense.fg_history_rounds &&
         defense.fg_confidence == o.defense.fg_confidence &&
         defense.n_k_cap == o.defense.n_k_cap;
}

namespace {

enum class MetaKind : std::uint8_t { kNone = 0, kDescriptor = 1, kMerge = 2 };

constexpr std::size_t kTrailerBytes = sizeof(VerifyKey) + sizeof(Signature);

void encode_descriptor(ByteWriter& w, const ChannelDescriptor& d) {
  w.u16(static_cast<std::uint16_t>(d.spec.layer_sizes.size()));
  for (auto s : d.spec.layer_sizes) w.u64(s);
  w.u8(static_cast<std::uint8_t>(d.spec.activation));
  const auto& h = d.hyperparams;
  w.u64(h.t);
  w.u64(h.c);
  w.u64(h.epochs);
  w.f64(h.lr);
  w.u64(h.batch_size);
  w.u8(static_cast<std::uint8_t>(h.dp.mode));
  w.f64(h.dp.sigma);
  w.f64(h.dp.clip_bound);
  w.f64(h.dp.sparsity);
  w.u8(h.defense.use_multikrum ? 1 : 0);
  w.u64(h.defense.f);
  w.u8(h.defense.use_foolsgold ? 1 : 0);
  w.u64(h.defense.fg_history_rounds);
  w.f64(h.defense.fg_confidence);
  w.u64(h.defense.n_k_cap);
}

std::uint8_t read_flag(ByteReader& r) {
  const auto v = r.u8();
  if (v > 1) throw IngestionError("bad boolean flag");
  return v;
}

ChannelDescriptor decode_descriptor(ByteReader& r) {
  ChannelDescriptor d;
  const auto layers = r.u16();
  for (std::uint16_t i = 0; i < layers; ++i) {
    d.spec.layer_sizes.push_back(static_cast<std::size_t>(r.u64()));
  }
  const auto act = r.u8();
  if (act > static_cast<std::uint8_t>(nn::Activation::kTanh)) {
    throw IngestionError("bad activation tag");
  }
  d.spec.activation = static_cast<nn::Activation>(act);
  auto& h = d.hyperparams;
  h.t = r.u64();
  h.c = r.u64();
  h.epochs = r.u64();
  h.lr = r.f64();
  h.batch_size = r.u64();
  const auto mode = r.u8();
  if (mode > static_cast<std::uint8_t>(dp::Mode::kPrune)) {
    throw IngestionError("bad dp mode tag");
  }
  h.dp.mode = static_cast<dp::Mode>(mode);
  h.dp.sigma = r.f64();
  h.dp.clip_bound = r.f64();
  h.dp.sparsity = r.f64();
  h.defense.use_multikrum = read_flag(r) != 0;
  h.defense.f = static_cast<std::size_t>(r.u64());
  h.defense.use_foolsgold = read_flag(r) != 0;
  h.defense.fg_history_rounds = static_cast<std::size_t>(r.u64());
  h.defense.fg_confidence = r.f64();
  h.defense.n_k_cap = r.u64();
  return d;
}

void encode_merge(ByteWriter& w, const MergeRecord& m) {
  w.u8(m.aborted ? 1 : 0);
  w.u32(static_cast<std::uint32_t>(m.entries.size()));
  for (const auto& e : m.entries) {
    w.u64(e.block_index);
    w.bytes(e.client.bytes);
    w.u64(e.round);
    w.u8(e.selected ? 1 : 0);
    w.f64(e.score);
    w.f64(e.fg_weight);
    w.f64(e.weight);
  }
}

MergeRecord decode_merge(ByteReader& r) {
  MergeRecord m;
  m.aborted = read_flag(r) != 0;
  const auto n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    MergeEntry e;
    e.block_index = r.u64();
    auto id = r.bytes(e.client.bytes.size());
    std::copy(id.begin(), id.end(), e.client.bytes.begin());
    e.round = r.u64();
    e.selected = read_flag(r) != 0;
    e.score = r.f64();
    e.fg_weight = r.f64();
    e.weight = r.f64();
    m.entries.push_back(e);
  }
  return m;
}

void encode_meta(ByteWriter& w, const BlockMeta& meta) {
  ByteWriter body;
  MetaKind kind = MetaKind::kNone;
  if (const auto* d = std::get_if<ChannelDescriptor>(&meta)) {
    kind = MetaKind::kDescriptor;
    encode_descriptor(body, *d);
  } else if (const auto* m = std::get_if<MergeRecord>(&meta)) {
    kind = MetaKind::kMerge;
    encode_merge(body, *m);
  }
  w.u8(static_cast<std::uint8_t>(kind));
  auto& b = body.buffer();
  w.u32(static_cast<std::uint32_t>(b.size()));
  w.bytes(b);
}

BlockMeta decode_meta(ByteReader& r) {
  const auto kind = r.u8();
  const auto len = r.u32();
  ByteReader body(r.bytes(len));
  BlockMeta meta;
  switch (static_cast<MetaKind>(kind)) {
    case MetaKind::kNone:
      break;
    case MetaKind::kDescriptor:
      meta = decode_descriptor(body);
      break;
    case MetaKind::kMerge:
      meta = decode_merge(body);
      break;
    default:
      throw IngestionError("bad meta kind");
  }
  if (body.remaining() != 0) throw IngestionError("trailing bytes in meta");
  return meta;
}

// include_chain_fields = false yields the signed subset.
std::vector<std::uint8_t> encode_block(const Block& b,
                                       bool include_chain_fields) {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(b.type));
  w.str16(b.channel_id);
  w.u64(b.round);
  w.bytes(b.creator.bytes);
  if (include_chain_fields) w.bytes(b.parent_hash);
  w.u64(b.n_k);
  w.u64(b.payload.size());
  for (double v : b.payload) w.f64(v);
  encode_meta(w, b.meta);
  if (include_chain_fields) w.u64(b.timestamp);
  return w.take();
}

}  // namespace

std::vector<std::uint8_t> Block::encode() const {
  return encode_block(*this, true);
}

std::vector<std::uint8_t> Block::signing_bytes() const {
  return encode_block(*this, false);
}

Digest Block::hash() const { return sha256(encode()); }

std::vector<std::uint8_t> Block::to_record() const {
  auto out = encode();
  out.insert(out.end(), creator_key.begin(), creator_key.end());
  out.insert(out.end(), signature.begin(), signature.end());
  return out;
}

Block Block::from_record(std::span<const std::uint8_t> record) {
  if (record.size() < kTrailerBytes) throw IngestionError("record too short");
  ByteReader r(record.first(record.size() - kTrailerBytes));
  Block b;
  const auto type = r.u8();
  if (type > static_cast<std::uint8_t>(BlockType::kGlobal)) {
    throw IngestionError("bad block type");
  }
  b.type = static_cast<BlockType>(type);
  b.channel_id = r.str16();
  b.round = r.u64();
  auto creator = r.bytes(b.creator.bytes.size());
  std::copy(creator.begin(), creator.end(), b.creator.bytes.begin());
  auto parent = r.bytes(b.parent_hash.size());
  std::copy(parent.begin(), parent.end(), b.parent_hash.begin());
  b.n_k = r.u64();
  const auto len = r.u64();
  if (len > r.remaining() / sizeof(double)) {
    throw IngestionError("payload length exceeds record");
  }
  b.payload.resize(static_cast<std::size_t>(len));
  for (auto& v : b.payload) v = r.f64();
  b.meta = decode_meta(r);
  b.timestamp = r.u64();
  if (r.remaining() != 0) throw IngestionError("trailing bytes in block");

  auto trailer = record.last(kTrailerBytes);
  std::copy_n(trailer.begin(), b.creator_key.size(), b.creator_key.begin());
  std::copy_n(trailer.begin() + static_cast<std::ptrdiff_t>(b.creator_key.size()),
              b.signature.size(), b.signature.begin());
  return b;
}

void Block::sign_with(const Identity& identity) {
  creator = identity.id();
  creator_key = identity.verify_key();
  signature = identity.sign(signing_bytes());
}

bool Block::signature_valid() const {
  return id_for_key(creator_key) == creator &&
         verify_signature(creator_key, signing_bytes(), signature);
}

}  // namespace beas::ledger
