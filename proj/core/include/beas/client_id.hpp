#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>

namespace beas {

// Opaque 16-byte participant identifier. Ordered lexicographically so it can
// serve as the deterministic tie-breaker wherever clients are sorted.
struct ClientId {
  std::array<std::uint8_t, 16> bytes{};

  auto operator<=>(const ClientId&) const = default;
  bool operator==(const ClientId&) const = default;

  std::string hex() const;
  // First 8 hex digits; enough to tell clients apart in logs.
  std::string short_hex() const { return hex().substr(0, 8); }

  static ClientId from_hex(const std::string& hex);
};

struct ClientIdHash {
  std::size_t operator()(const ClientId& id) const noexcept {
    std::uint64_t h = 1469598103934665603ULL;
    for (auto b : id.bytes) {
      h ^= b;
      h *= 1099511628211ULL;
    }
    return static_cast<std::size_t>(h);
  }
};

}  // namespace beas
