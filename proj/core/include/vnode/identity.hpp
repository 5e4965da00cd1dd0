#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vnode/crypto.hpp"
#include "vnode/lang.hpp"
#include "vnode/ledger.hpp"
#include "vnode/storage.hpp"

namespace vnode {

using UserId = std::array<std::uint8_t, 16>;

struct UserProfile {
  UserId user_id{};
  std::string username;
  std::string password_record;
  LanguageCode default_lang;
  std::optional<std::string> picture_ref;
  PublicKey public_key{};
  Address address;
  std::int64_t created_at = 0;
};

struct FollowEdge {
  UserId follower{};
  UserId followee{};
  std::int64_t since = 0;

  friend bool operator==(const FollowEdge&, const FollowEdge&) = default;
};

struct Session {
  std::string token;  // 64 lowercase hex chars
  UserId user_id{};
  std::int64_t expires_at = 0;
};

/// Registration transaction payload: user_id(16) | name_len(u8) | name |
/// lang_len(u8) | lang.
struct RegistrationPayload {
  UserId user_id{};
  std::string username;
  std::string lang;

  Bytes encode() const;
  static std::optional<RegistrationPayload> decode(ByteView payload);
};

bool valid_username(std::string_view name);

using Clock = std::function<std::int64_t()>;
std::int64_t system_now_ms();

struct IdentityOptions {
  KdfParams kdf;
  std::int64_t session_ttl_ms = 24LL * 3600 * 1000;
  std::size_t max_picture_bytes = 2u << 20;
  Clock clock;
};

class IdentityService {
 public:
  IdentityService(Store& store, IdentityOptions options = {});

  /// Throws invalid_username, weak_password, unsupported_language or
  /// username_taken.
  UserProfile register_user(std::string_view username, std::string_view password, std::string_view default_lang);
  /// Throws invalid_credentials for both unknown users and wrong passwords.
  Session login(std::string_view username, std::string_view password);
  /// Resolves a bearer token; throws unauthorized when missing or expired.
  UserProfile authenticate(std::string_view token) const;
  void logout(std::string_view token);

  FollowEdge follow(const UserId& follower, std::string_view followee_username);
  /// Returns false when no edge existed.
  bool unfollow(const UserId& follower, std::string_view followee_username);
  std::vector<UserId> followees(const UserId& user) const;
  bool is_following(const UserId& follower, const UserId& followee) const;

  std::optional<UserProfile> find_by_id(const UserId& id) const;
  std::optional<UserProfile> find_by_username(std::string_view username) const;
  std::optional<UserProfile> find_by_address(const Address& address) const;
  /// Throws unknown_user.
  UserProfile get(const UserId& id) const;

  UserProfile set_default_language(const UserId& id, std::string_view lang);
  /// Stores an image (PNG, JPEG, GIF or WebP) in the blob store.
  UserProfile set_picture(const UserId& id, ByteView image);

  /// Signing key held by the node on the user's behalf.
  KeyPair signing_key(const UserId& id) const;

  /// Submits registration transactions that a crash left unsent.
  std::size_t recover();
  std::size_t sweep_sessions();

 private:
  std::int64_t now() const;

  Store& store_;
  IdentityOptions options_;
  std::string dummy_record_;
};

/// "png", "jpeg", "gif" or "webp"; nullopt for anything else.
std::optional<std::string> sniff_image_type(ByteView bytes);

}  // namespace vnode
