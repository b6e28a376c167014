#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "beas/client_id.hpp"

namespace beas::ledger {

using Digest = std::array<std::uint8_t, 32>;
using VerifyKey = std::array<std::uint8_t, 32>;
using Signature = std::array<std::uint8_t, 64>;

Digest sha256(std::span<const std::uint8_t> bytes);

// Identifiers are self-certifying: the first 16 bytes of SHA-256(verify key).
ClientId id_for_key(const VerifyKey& key);

// Ed25519 signature check (deterministic scheme; same key + message gives the
// same signature).
bool verify_signature(const VerifyKey& key, std::span<const std::uint8_t> msg,
                      const Signature& sig);

// A participant's keypair. Copyable value; whoever holds it can sign as the
// participant.
class Identity {
 public:
  // Deterministic keypair from a 32-byte seed.
  static Identity from_seed(const std::array<std::uint8_t, 32>& seed);

  const ClientId& id() const { return id_; }
  const VerifyKey& verify_key() const { return verify_key_; }
  Signature sign(std::span<const std::uint8_t> msg) const;

 private:
  Identity() = default;
  ClientId id_;
  VerifyKey verify_key_{};
  std::array<std::uint8_t, 64> signing_key_{};
};

}  // namespace beas::ledger
