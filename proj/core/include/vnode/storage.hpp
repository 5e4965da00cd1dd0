#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <type_traits>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include "vnode/bytes.hpp"
#include "vnode/crypto.hpp"
#include "vnode/ledger.hpp"

struct sqlite3;
struct sqlite3_stmt;

namespace vnode {

constexpr int kSchemaVersion = 1;

/// Prepared statement; only valid while the owning Database lock is held.
class Statement {
 public:
  Statement(sqlite3* db, std::string_view sql);
  ~Statement();
  Statement(Statement&& other) noexcept;
  Statement(const Statement&) = delete;
  Statement& operator=(const Statement&) = delete;
  Statement& operator=(Statement&&) = delete;

  Statement& bind(int index, std::int64_t value);
  Statement& bind(int index, std::string_view text);
  Statement& bind(int index, const char* text) { return bind(index, std::string_view(text)); }
  Statement& bind(int index, const std::string& text) { return bind(index, std::string_view(text)); }
  Statement& bind_blob(int index, ByteView blob);
  Statement& bind_null(int index);

  /// True when a row is available.
  bool step();
  /// Runs a statement that returns no rows.
  void run();

  bool is_null(int col) const;
  std::int64_t int64(int col) const;
  std::string text(int col) const;
  Bytes blob(int col) const;
  template <std::size_t N>
  std::array<std::uint8_t, N> array(int col) const {
    auto b = blob(col);
    std::array<std::uint8_t, N> out{};
    std::copy_n(b.begin(), std::min(N, b.size()), out.begin());
    return out;
  }

 private:
  sqlite3* db_;
  sqlite3_stmt* stmt_ = nullptr;
};

/// One SQLite connection guarded by a recursive mutex. Every access goes
/// through read() or transaction(), which hold the lock for the callback.
class Database {
 public:
  static std::unique_ptr<Database> open(const std::filesystem::path& file);
  ~Database();

  template <typename F>
  auto read(F&& f) {
    std::lock_guard lk(mu_);
    return f(*this);
  }

  /// BEGIN IMMEDIATE ... COMMIT; rolls back when f throws.
  template <typename F>
  auto transaction(F&& f) {
    std::lock_guard lk(mu_);
    const bool outer = depth_++ == 0;
    if (outer) exec("BEGIN IMMEDIATE");
    try {
      if constexpr (std::is_void_v<decltype(f(*this))>) {
        f(*this);
        finish(outer);
      } else {
        auto result = f(*this);
        finish(outer);
        return result;
      }
    } catch (...) {
      --depth_;
      if (outer) rollback();
      throw;
    }
  }

  Statement prepare(std::string_view sql);
  void exec(std::string_view sql);
  std::int64_t changes() const;

 private:
  explicit Database(sqlite3* db) : db_(db) {}
  void finish(bool outer) {
    --depth_;
    if (outer) exec("COMMIT");
  }
  void rollback() noexcept;

  sqlite3* db_;
  std::recursive_mutex mu_;
  int depth_ = 0;
};

/// Content-addressed files named "<sha256 hex><ext>". Writes are
/// temp-file-then-rename; reads re-verify the hash.
class BlobStore {
 public:
  BlobStore(std::filesystem::path dir, std::size_t max_bytes);

  std::string put(ByteView bytes, std::string_view ext = ".wav");
  /// Throws not_found or corrupt_blob.
  Bytes get(std::string_view ref) const;
  bool contains(std::string_view ref) const;
  void remove(std::string_view ref);

  /// Hash encoded in a well-formed ref; nullopt for anything else.
  static std::optional<Hash32> hash_of(std::string_view ref);

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path path_for(std::string_view ref) const;

  std::filesystem::path dir_;
  std::size_t max_bytes_;
};

struct StoreOptions {
  LedgerOptions ledger;
  std::size_t max_blob_bytes = 10u << 20;
};

/// Owns the on-disk layout of a node:
///   records.db   users, follows, sessions, posts, translations
///   blobs/       content-addressed audio and pictures
///   chain.vdl    ledger chain file
///   node_keys    service account seeds
class Store {
 public:
  /// Creates the layout when absent. Throws schema_mismatch (without touching
  /// the directory) or unwritable.
  static std::unique_ptr<Store> open(const std::filesystem::path& data_dir, StoreOptions options = {});

  Database& db() { return *db_; }
  BlobStore& blobs() { return blobs_; }
  Ledger& ledger() { return *ledger_; }
  const KeyPair& translator() const { return translator_; }
  const std::filesystem::path& dir() const { return dir_; }

 private:
  Store(std::filesystem::path dir, std::unique_ptr<Database> db, BlobStore blobs, std::unique_ptr<Ledger> ledger,
        KeyPair translator);

  std::filesystem::path dir_;
  std::unique_ptr<Database> db_;
  BlobStore blobs_;
  std::unique_ptr<Ledger> ledger_;
  KeyPair translator_;
};

inline std::unique_ptr<Store> init_store(const std::filesystem::path& data_dir, StoreOptions options = {}) {
  return Store::open(data_dir, std::move(options));
}

/// Schema version recorded in an existing records database, if any.
std::optional<int> read_schema_version(const std::filesystem::path& data_dir);

}  // namespace vnode
