#include "vnode/crypto.hpp"

#include <sodium.h>

#include <stdexcept>

namespace vnode {

void crypto_init() {
  static const bool ok = sodium_init() >= 0;
  if (!ok) throw std::runtime_error("libsodium initialization failed");
}

Hash32 sha256(ByteView data) {
  crypto_init();
  Hash32 out{};
  crypto_hash_sha256(out.data(), data.data(), data.size());
  return out;
}

void random_fill(std::span<std::uint8_t> out) {
  crypto_init();
  randombytes_buf(out.data(), out.size());
}

KeyPair KeyPair::generate() { return from_seed(random_array<32>()); }

KeyPair KeyPair::from_seed(const KeySeed& seed) {
  crypto_init();
  KeyPair kp;
  kp.seed_ = seed;
  crypto_sign_seed_keypair(kp.public_key_.data(), kp.secret_.data(), seed.data());
  return kp;
}

Signature KeyPair::sign(ByteView message) const {
  Signature sig{};
  crypto_sign_detached(sig.data(), nullptr, message.data(), message.size(), secret_.data());
  return sig;
}

bool verify_signature(const Signature& sig, ByteView message, const PublicKey& key) {
  crypto_init();
  return crypto_sign_verify_detached(sig.data(), message.data(), message.size(), key.data()) == 0;
}

KdfParams KdfParams::minimal() {
  return {crypto_pwhash_OPSLIMIT_MIN, crypto_pwhash_MEMLIMIT_MIN};
}

std::string hash_password(std::string_view password, const KdfParams& params) {
  crypto_init();
  char record[crypto_pwhash_STRBYTES];
  if (crypto_pwhash_str_alg(record, password.data(), password.size(), params.ops_limit,
                            params.mem_limit_bytes, crypto_pwhash_ALG_ARGON2ID13) != 0) {
    throw std::runtime_error("password hashing ran out of memory");
  }
  return record;
}

bool verify_password(std::string_view record, std::string_view password) {
  crypto_init();
  std::string terminated(record);
  return crypto_pwhash_str_verify(terminated.c_str(), password.data(), password.size()) == 0;
}

}  // namespace vnode

namespace vnode {

std::string base64_encode(ByteView bytes) {
  crypto_init();
  std::string out(sodium_base64_encoded_len(bytes.size(), sodium_base64_VARIANT_ORIGINAL), '\0');
  sodium_bin2base64(out.data(), out.size(), bytes.data(), bytes.size(), sodium_base64_VARIANT_ORIGINAL);
  out.resize(out.size() - 1);  // trailing NUL
  return out;
}

std::optional<Bytes> base64_decode(std::string_view text) {
  crypto_init();
  Bytes out(text.size() / 4 * 3 + 3);
  std::size_t len = 0;
  if (sodium_base642bin(out.data(), out.size(), text.data(), text.size(), nullptr, &len, nullptr,
                        sodium_base64_VARIANT_ORIGINAL) != 0) {
    return std::nullopt;
  }
  out.resize(len);
  return out;
}

}  // namespace vnode
