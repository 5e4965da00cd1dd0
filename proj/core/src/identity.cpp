#include "vnode/identity.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>

#include "vnode/error.hpp"

namespace vnode {
namespace {

constexpr const char* kUserColumns =
    "user_id, username, password_record, default_lang, picture_ref, public_key, address, created_at";

UserProfile read_user(const Statement& st) {
  UserProfile u;
  u.user_id = st.array<16>(0);
  u.username = st.text(1);
  u.password_record = st.text(2);
  u.default_lang = resolve_language(st.text(3));
  if (!st.is_null(4)) u.picture_ref = st.text(4);
  u.public_key = st.array<32>(5);
  u.address.bytes = st.array<20>(6);
  u.created_at = st.int64(7);
  return u;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

}  // namespace

std::int64_t system_now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

bool valid_username(std::string_view name) {
  if (name.size() < 3 || name.size() > 32) return false;
  return std::all_of(name.begin(), name.end(), [](unsigned char c) { return std::isalnum(c) || c == '_'; });
}

Bytes RegistrationPayload::encode() const {
  Bytes out;
  BeWriter w(out);
  w.raw(user_id);
  w.u8(static_cast<std::uint8_t>(username.size()));
  w.raw(username);
  w.u8(static_cast<std::uint8_t>(lang.size()));
  w.raw(lang);
  return out;
}

std::optional<RegistrationPayload> RegistrationPayload::decode(ByteView payload) {
  BeReader in(payload);
  RegistrationPayload p;
  auto id = in.array<16>();
  if (!id) return std::nullopt;
  p.user_id = *id;
  auto nlen = in.u8();
  if (!nlen) return std::nullopt;
  auto name = in.take(*nlen);
  if (!name) return std::nullopt;
  p.username = to_string(*name);
  auto llen = in.u8();
  if (!llen) return std::nullopt;
  auto lang = in.take(*llen);
  if (!lang || !in.done()) return std::nullopt;
  p.lang = to_string(*lang);
  return p;
}

std::optional<std::string> sniff_image_type(ByteView b) {
  auto starts = [&](std::initializer_list<std::uint8_t> sig, std::size_t at = 0) {
    if (b.size() < at + sig.size()) return false;
    return std::equal(sig.begin(), sig.end(), b.begin() + static_cast<std::ptrdiff_t>(at));
  };
  if (starts({0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a})) return "png";
  if (starts({0xff, 0xd8, 0xff})) return "jpeg";
  if (starts({'G', 'I', 'F', '8'})) return "gif";
  if (starts({'R', 'I', 'F', 'F'}) && starts({'W', 'E', 'B', 'P'}, 8)) return "webp";
  return std::nullopt;
}

IdentityService::IdentityService(Store& store, IdentityOptions options)
    : store_(store), options_(std::move(options)) {
  if (options_.session_ttl_ms <= 0) fail(Errc::config_error, "session TTL must be positive");
  // Used to keep login timing identical for unknown users.
  dummy_record_ = hash_password("not-a-real-password", options_.kdf);
}

std::int64_t IdentityService::now() const { return options_.clock ? options_.clock() : system_now_ms(); }

UserProfile IdentityService::register_user(std::string_view username, std::string_view password,
                                           std::string_view default_lang) {
  if (!valid_username(username)) {
    fail(Errc::invalid_username, "username must be 3-32 characters of letters, digits or underscore");
  }
  if (password.size() < 8) fail(Errc::weak_password, "password must be at least 8 characters");
  const LanguageCode lang = resolve_language(default_lang);

  UserProfile u;
  u.user_id = random_array<16>();
  u.username = std::string(username);
  u.password_record = hash_password(password, options_.kdf);
  u.default_lang = lang;
  const KeyPair keys = KeyPair::generate();
  u.public_key = keys.public_key();
  u.address = derive_address(u.public_key);
  u.created_at = now();

  store_.db().transaction([&](Database& db) {
    auto exists = db.prepare("SELECT 1 FROM users WHERE username_lc = ?");
    exists.bind(1, lower(username));
    if (exists.step()) fail(Errc::username_taken, "username '" + std::string(username) + "' is taken");
    db.prepare(
          "INSERT INTO users (user_id, username, username_lc, password_record, default_lang, key_seed, public_key, "
          "address, created_at) VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?)")
        .bind_blob(1, u.user_id)
        .bind(2, u.username)
        .bind(3, lower(username))
        .bind(4, u.password_record)
        .bind(5, lang.code())
        .bind_blob(6, keys.seed())
        .bind_blob(7, u.public_key)
        .bind_blob(8, u.address.bytes)
        .bind(9, u.created_at)
        .run();
  });

  const RegistrationPayload payload{u.user_id, u.username, std::string(lang.code())};
  try {
    const Receipt r = store_.ledger().submit(TxKind::registration, payload.encode(), keys);
    store_.db().transaction([&](Database& db) {
      db.prepare("UPDATE users SET reg_tx = ? WHERE user_id = ?").bind_blob(1, r.tx_hash).bind_blob(2, u.user_id).run();
    });
  } catch (const Error&) {
    store_.db().transaction(
        [&](Database& db) { db.prepare("DELETE FROM users WHERE user_id = ?").bind_blob(1, u.user_id).run(); });
    throw;
  }
  return u;
}

Session IdentityService::login(std::string_view username, std::string_view password) {
  auto user = find_by_username(username);
  const std::string& record = user ? user->password_record : dummy_record_;
  const bool ok = verify_password(record, password);
  if (!user || !ok) fail(Errc::invalid_credentials, "invalid username or password");

  Session s;
  s.token = to_hex(random_array<32>());
  s.user_id = user->user_id;
  s.expires_at = now() + options_.session_ttl_ms;
  store_.db().transaction([&](Database& db) {
    db.prepare("INSERT INTO sessions (token, user_id, expires_at) VALUES (?, ?, ?)")
        .bind(1, s.token)
        .bind_blob(2, s.user_id)
        .bind(3, s.expires_at)
        .run();
  });
  return s;
}

UserProfile IdentityService::authenticate(std::string_view token) const {
  if (token.size() != 64) fail(Errc::unauthorized, "missing or malformed bearer token");
  auto found = store_.db().read([&](Database& db) -> std::optional<std::pair<UserId, std::int64_t>> {
    auto st = db.prepare("SELECT user_id, expires_at FROM sessions WHERE token = ?");
    st.bind(1, token);
    if (!st.step()) return std::nullopt;
    return std::pair{st.array<16>(0), st.int64(1)};
  });
  if (!found) fail(Errc::unauthorized, "unknown session");
  if (found->second <= now()) fail(Errc::unauthorized, "session expired");
  auto user = find_by_id(found->first);
  if (!user) fail(Errc::unauthorized, "session user no longer exists");
  return *user;
}

void IdentityService::logout(std::string_view token) {
  store_.db().transaction(
      [&](Database& db) { db.prepare("DELETE FROM sessions WHERE token = ?").bind(1, token).run(); });
}

FollowEdge IdentityService::follow(const UserId& follower, std::string_view followee_username) {
  auto target = find_by_username(followee_username);
  if (!target) fail(Errc::unknown_user, "no user '" + std::string(followee_username) + "'");
  if (!find_by_id(follower)) fail(Errc::unknown_user, "follower does not exist");
  if (target->user_id == follower) fail(Errc::self_follow, "users cannot follow themselves");
  return store_.db().transaction([&](Database& db) {
    db.prepare("INSERT OR IGNORE INTO follows (follower, followee, since) VALUES (?, ?, ?)")
        .bind_blob(1, follower)
        .bind_blob(2, target->user_id)
        .bind(3, now())
        .run();
    auto st = db.prepare("SELECT since FROM follows WHERE follower = ? AND followee = ?");
    st.bind_blob(1, follower).bind_blob(2, target->user_id);
    st.step();
    return FollowEdge{follower, target->user_id, st.int64(0)};
  });
}

bool IdentityService::unfollow(const UserId& follower, std::string_view followee_username) {
  auto target = find_by_username(followee_username);
  if (!target) fail(Errc::unknown_user, "no user '" + std::string(followee_username) + "'");
  return store_.db().transaction([&](Database& db) {
    db.prepare("DELETE FROM follows WHERE follower = ? AND followee = ?")
        .bind_blob(1, follower)
        .bind_blob(2, target->user_id)
        .run();
    return db.changes() > 0;
  });
}

std::vector<UserId> IdentityService::followees(const UserId& user) const {
  return store_.db().read([&](Database& db) {
    std::vector<UserId> out;
    auto st = db.prepare("SELECT followee FROM follows WHERE follower = ? ORDER BY since, followee");
    st.bind_blob(1, user);
    while (st.step()) out.push_back(st.array<16>(0));
    return out;
  });
}

bool IdentityService::is_following(const UserId& follower, const UserId& followee) const {
  return store_.db().read([&](Database& db) {
    auto st = db.prepare("SELECT 1 FROM follows WHERE follower = ? AND followee = ?");
    st.bind_blob(1, follower).bind_blob(2, followee);
    return st.step();
  });
}

std::optional<UserProfile> IdentityService::find_by_id(const UserId& id) const {
  return store_.db().read([&](Database& db) -> std::optional<UserProfile> {
    auto st = db.prepare(std::string("SELECT ") + kUserColumns + " FROM users WHERE user_id = ?");
    st.bind_blob(1, id);
    if (!st.step()) return std::nullopt;
    return read_user(st);
  });
}

std::optional<UserProfile> IdentityService::find_by_username(std::string_view username) const {
  return store_.db().read([&](Database& db) -> std::optional<UserProfile> {
    auto st = db.prepare(std::string("SELECT ") + kUserColumns + " FROM users WHERE username_lc = ?");
    st.bind(1, lower(username));
    if (!st.step()) return std::nullopt;
    return read_user(st);
  });
}

std::optional<UserProfile> IdentityService::find_by_address(const Address& address) const {
  return store_.db().read([&](Database& db) -> std::optional<UserProfile> {
    auto st = db.prepare(std::string("SELECT ") + kUserColumns + " FROM users WHERE address = ?");
    st.bind_blob(1, address.bytes);
    if (!st.step()) return std::nullopt;
    return read_user(st);
  });
}

UserProfile IdentityService::get(const UserId& id) const {
  auto u = find_by_id(id);
  if (!u) fail(Errc::unknown_user, "no such user");
  return *u;
}

UserProfile IdentityService::set_default_language(const UserId& id, std::string_view lang) {
  const LanguageCode code = resolve_language(lang);
  store_.db().transaction([&](Database& db) {
    db.prepare("UPDATE users SET default_lang = ? WHERE user_id = ?").bind(1, code.code()).bind_blob(2, id).run();
    if (db.changes() == 0) fail(Errc::unknown_user, "no such user");
  });
  return get(id);
}

UserProfile IdentityService::set_picture(const UserId& id, ByteView image) {
  if (image.size() > options_.max_picture_bytes) {
    fail(Errc::too_large, "picture exceeds " + std::to_string(options_.max_picture_bytes) + " bytes");
  }
  auto type = sniff_image_type(image);
  if (!type) fail(Errc::unsupported_encoding, "picture must be PNG, JPEG, GIF or WebP");
  const std::string ref = store_.blobs().put(image, "." + *type);
  store_.db().transaction([&](Database& db) {
    db.prepare("UPDATE users SET picture_ref = ? WHERE user_id = ?").bind(1, ref).bind_blob(2, id).run();
    if (db.changes() == 0) fail(Errc::unknown_user, "no such user");
  });
  return get(id);
}

KeyPair IdentityService::signing_key(const UserId& id) const {
  auto seed = store_.db().read([&](Database& db) -> std::optional<KeySeed> {
    auto st = db.prepare("SELECT key_seed FROM users WHERE user_id = ?");
    st.bind_blob(1, id);
    if (!st.step()) return std::nullopt;
    return st.array<32>(0);
  });
  if (!seed) fail(Errc::unknown_user, "no such user");
  return KeyPair::from_seed(*seed);
}

std::size_t IdentityService::recover() {
  struct Orphan {
    UserId id;
    std::string username;
    std::string lang;
    KeySeed seed;
  };
  auto orphans = store_.db().read([](Database& db) {
    std::vector<Orphan> out;
    auto st = db.prepare("SELECT user_id, username, default_lang, key_seed FROM users WHERE reg_tx IS NULL");
    while (st.step()) out.push_back({st.array<16>(0), st.text(1), st.text(2), st.array<32>(3)});
    return out;
  });
  if (orphans.empty()) return 0;

  // A crash may land between the ledger append and the reg_tx update.
  std::map<Address, Hash32> on_chain;
  for (const auto& rec : store_.ledger().transactions_of_kind(TxKind::registration)) {
    on_chain[rec.tx.sender] = rec.receipt.tx_hash;
  }
  for (const auto& o : orphans) {
    const KeyPair keys = KeyPair::from_seed(o.seed);
    const Address addr = derive_address(keys.public_key());
    Hash32 hash;
    if (auto it = on_chain.find(addr); it != on_chain.end()) {
      hash = it->second;
    } else {
      hash = store_.ledger().submit(TxKind::registration, RegistrationPayload{o.id, o.username, o.lang}.encode(), keys)
                 .tx_hash;
    }
    store_.db().transaction([&](Database& db) {
      db.prepare("UPDATE users SET reg_tx = ? WHERE user_id = ?").bind_blob(1, hash).bind_blob(2, o.id).run();
    });
  }
  return orphans.size();
}

std::size_t IdentityService::sweep_sessions() {
  return store_.db().transaction([&](Database& db) {
    db.prepare("DELETE FROM sessions WHERE expires_at <= ?").bind(1, now()).run();
    return static_cast<std::size_t>(db.changes());
  });
}

}  // namespace vnode
