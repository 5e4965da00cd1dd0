#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "vnode/bytes.hpp"

namespace vnode {

using PublicKey = std::array<std::uint8_t, 32>;
using KeySeed = std::array<std::uint8_t, 32>;
using Signature = std::array<std::uint8_t, 64>;

/// Initializes libsodium. Safe to call repeatedly; every entry point in this
/// header calls it.
void crypto_init();

Hash32 sha256(ByteView data);
inline Hash32 sha256(std::string_view s) { return sha256(as_bytes(s)); }

void random_fill(std::span<std::uint8_t> out);

template <std::size_t N>
std::array<std::uint8_t, N> random_array() {
  std::array<std::uint8_t, N> out{};
  random_fill(out);
  return out;
}

/// Ed25519 signing key. Only the 32-byte seed is persisted; the expanded
/// secret key is derived on load.
class KeyPair {
 public:
  static KeyPair generate();
  static KeyPair from_seed(const KeySeed& seed);

  const PublicKey& public_key() const { return public_key_; }
  const KeySeed& seed() const { return seed_; }

  Signature sign(ByteView message) const;

 private:
  KeyPair() = default;

  KeySeed seed_{};
  PublicKey public_key_{};
  std::array<std::uint8_t, 64> secret_{};
};

bool verify_signature(const Signature& sig, ByteView message, const PublicKey& key);

/// Argon2id cost parameters for password records.
struct KdfParams {
  std::uint64_t ops_limit = 2;
  std::size_t mem_limit_bytes = 64u << 20;

  static KdfParams minimal();
};

/// Self-describing Argon2id record (embeds a 16-byte random salt).
std::string hash_password(std::string_view password, const KdfParams& params);
/// Constant-time verification against a record produced by hash_password.
bool verify_password(std::string_view record, std::string_view password);

}  // namespace vnode

namespace vnode {

std::string base64_encode(ByteView bytes);
std::optional<Bytes> base64_decode(std::string_view text);

}  // namespace vnode
