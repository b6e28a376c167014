#include "beas/ledger/identity.hpp"

#include <sodium.h>

#include <algorithm>
#include <stdexcept>

#include "beas/error.hpp"

namespace beas::ledger {
namespace {

void ensure_sodium() {
  static const bool ready = [] { return sodium_init() >= 0; }();
  if (!ready) throw Error("libsodium failed to initialise");
}

}  // namespace

Digest sha256(std::span<const std::uint8_t> bytes) {
  ensure_sodium();
  Digest out{};
  crypto_hash_sha256(out.data(), bytes.data(), bytes.size());
  return out;
}

ClientId id_for_key(const VerifyKey& key) {
  const auto h = sha256(key);
  ClientId id;
  std::copy_n(h.begin(), id.bytes.size(), id.bytes.begin());
  return id;
}

bool verify_signature(const VerifyKey& key, std::span<const std::uint8_t> msg,
                      const Signature& sig) {
  ensure_sodium();
  return crypto_sign_verify_detached(sig.data(), msg.data(), msg.size(),
                                     key.data()) == 0;
}

Identity Identity::from_seed(const std::array<std::uint8_t, 32>& seed) {
  ensure_sodium();
  static_assert(crypto_sign_SEEDBYTES == 32);
  static_assert(crypto_sign_PUBLICKEYBYTES == 32);
  static_assert(crypto_sign_SECRETKEYBYTES == 64);
  Identity out;
  crypto_sign_seed_keypair(out.verify_key_.data(), out.signing_key_.data(),
                           seed.data());
  out.id_ = id_for_key(out.verify_key_);
  return out;
}

Signature Identity::sign(std::span<const std::uint8_t> msg) const {
  ensure_sodium();
  Signature sig{};
  crypto_sign_detached(sig.data(), nullptr, msg.data(), msg.size(),
                       signing_key_.data());
  return sig;
}

}  // namespace beas::ledger
