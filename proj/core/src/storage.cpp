#include "vnode/storage.hpp"

#include <fcntl.h>
#include <sqlite3.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "vnode/error.hpp"

namespace vnode {
namespace fs = std::filesystem;

namespace {

constexpr const char* kRecordsFile = "records.db";
constexpr const char* kChainFile = "chain.vdl";
constexpr const char* kNodeKeysFile = "node_keys";

constexpr const char* kSchema = R"sql(
CREATE TABLE IF NOT EXISTS meta (
  key TEXT PRIMARY KEY,
  value TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS users (
  user_id BLOB PRIMARY KEY,
  username TEXT NOT NULL,
  username_lc TEXT NOT NULL UNIQUE,
  password_record TEXT NOT NULL,
  default_lang TEXT NOT NULL,
  picture_ref TEXT,
  key_seed BLOB NOT NULL,
  public_key BLOB NOT NULL,
  address BLOB NOT NULL UNIQUE,
  created_at INTEGER NOT NULL,
  reg_tx BLOB
);
CREATE TABLE IF NOT EXISTS follows (
  follower BLOB NOT NULL,
  followee BLOB NOT NULL,
  since INTEGER NOT NULL,
  PRIMARY KEY (follower, followee)
);
CREATE INDEX IF NOT EXISTS follows_by_followee ON follows (followee);
CREATE TABLE IF NOT EXISTS sessions (
  token TEXT PRIMARY KEY,
  user_id BLOB NOT NULL,
  expires_at INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS posts (
  post_id BLOB PRIMARY KEY,
  author BLOB NOT NULL,
  lang TEXT NOT NULL,
  audio_ref TEXT NOT NULL,
  audio_hash BLOB NOT NULL,
  transcript TEXT NOT NULL,
  created_at INTEGER NOT NULL,
  committed INTEGER NOT NULL DEFAULT 0,
  tx_hash BLOB,
  block_height INTEGER,
  block_hash BLOB,
  gas_used INTEGER,
  cost_wei TEXT
);
CREATE INDEX IF NOT EXISTS posts_by_author_time ON posts (author, created_at DESC, post_id);
CREATE TABLE IF NOT EXISTS translations (
  post_id BLOB NOT NULL,
  target_lang TEXT NOT NULL,
  text TEXT NOT NULL,
  audio_ref TEXT NOT NULL,
  engine_id TEXT NOT NULL,
  committed INTEGER NOT NULL DEFAULT 0,
  tx_hash BLOB,
  block_height INTEGER,
  block_hash BLOB,
  gas_used INTEGER,
  cost_wei TEXT,
  PRIMARY KEY (post_id, target_lang)
);
)sql";

void fsync_dir(const fs::path& dir) {
  int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
  if (fd >= 0) {
    ::fsync(fd);
    ::close(fd);
  }
}

void write_file_atomic(const fs::path& path, ByteView bytes, mode_t mode) {
  Bytes nonce = Bytes(8);
  random_fill(nonce);
  const fs::path tmp = path.parent_path() / (".tmp-" + to_hex(nonce));
  int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_EXCL | O_CLOEXEC, mode);
  if (fd < 0) fail(Errc::unwritable, "cannot create " + tmp.string() + ": " + std::strerror(errno));
  std::size_t off = 0;
  bool ok = true;
  while (off < bytes.size()) {
    ssize_t n = ::write(fd, bytes.data() + off, bytes.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      ok = false;
      break;
    }
    off += static_cast<std::size_t>(n);
  }
  ok = ok && ::fsync(fd) == 0;
  ::close(fd);
  if (!ok || ::rename(tmp.c_str(), path.c_str()) != 0) {
    const std::string why = std::strerror(errno);
    ::unlink(tmp.c_str());
    fail(Errc::storage_failure, "cannot write " + path.string() + ": " + why);
  }
  fsync_dir(path.parent_path());
}

KeyPair load_or_create_node_keys(const fs::path& file) {
  if (fs::exists(file)) {
    std::ifstream in(file);
    std::string line;
    while (std::getline(in, line)) {
      constexpr std::string_view prefix = "translator=";
      if (line.rfind(prefix, 0) == 0) {
        if (auto seed = array_from_hex<32>(std::string_view(line).substr(prefix.size()))) {
          return KeyPair::from_seed(*seed);
        }
      }
    }
    fail(Errc::storage_failure, "node_keys has no valid translator entry");
  }
  auto keys = KeyPair::generate();
  const std::string body = "translator=" + to_hex(keys.seed()) + "\n";
  write_file_atomic(file, as_bytes(body), 0600);
  return keys;
}

}  // namespace

// ---------------------------------------------------------------------------

Statement::Statement(sqlite3* db, std::string_view sql) : db_(db) {
  if (sqlite3_prepare_v2(db, sql.data(), static_cast<int>(sql.size()), &stmt_, nullptr) != SQLITE_OK) {
    fail(Errc::storage_failure, std::string("sql prepare: ") + sqlite3_errmsg(db));
  }
}

Statement::~Statement() {
  if (stmt_) sqlite3_finalize(stmt_);
}

Statement::Statement(Statement&& other) noexcept : db_(other.db_), stmt_(other.stmt_) { other.stmt_ = nullptr; }

Statement& Statement::bind(int index, std::int64_t value) {
  sqlite3_bind_int64(stmt_, index, value);
  return *this;
}

Statement& Statement::bind(int index, std::string_view text) {
  sqlite3_bind_text(stmt_, index, text.data(), static_cast<int>(text.size()), SQLITE_TRANSIENT);
  return *this;
}

Statement& Statement::bind_blob(int index, ByteView blob) {
  sqlite3_bind_blob(stmt_, index, blob.data(), static_cast<int>(blob.size()), SQLITE_TRANSIENT);
  return *this;
}

Statement& Statement::bind_null(int index) {
  sqlite3_bind_null(stmt_, index);
  return *this;
}

bool Statement::step() {
  const int rc = sqlite3_step(stmt_);
  if (rc == SQLITE_ROW) return true;
  if (rc == SQLITE_DONE) return false;
  if (rc == SQLITE_CONSTRAINT) fail(Errc::invalid_argument, std::string("constraint: ") + sqlite3_errmsg(db_));
  fail(Errc::storage_failure, std::string("sql step: ") + sqlite3_errmsg(db_));
}

void Statement::run() {
  while (step()) {
  }
}

bool Statement::is_null(int col) const { return sqlite3_column_type(stmt_, col) == SQLITE_NULL; }
std::int64_t Statement::int64(int col) const { return sqlite3_column_int64(stmt_, col); }

std::string Statement::text(int col) const {
  const auto* p = sqlite3_column_text(stmt_, col);
  return p ? std::string(reinterpret_cast<const char*>(p), static_cast<std::size_t>(sqlite3_column_bytes(stmt_, col)))
           : std::string();
}

Bytes Statement::blob(int col) const {
  const auto* p = static_cast<const std::uint8_t*>(sqlite3_column_blob(stmt_, col));
  return p ? Bytes(p, p + sqlite3_column_bytes(stmt_, col)) : Bytes();
}

// ---------------------------------------------------------------------------

std::unique_ptr<Database> Database::open(const fs::path& file) {
  sqlite3* db = nullptr;
  const int rc = sqlite3_open_v2(file.c_str(), &db,
                                 SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX, nullptr);
  if (rc != SQLITE_OK) {
    std::string why = db ? sqlite3_errmsg(db) : "out of memory";
    sqlite3_close(db);
    fail(Errc::unwritable, "cannot open " + file.string() + ": " + why);
  }
  sqlite3_busy_timeout(db, 5000);
  auto out = std::unique_ptr<Database>(new Database(db));
  out->exec("PRAGMA journal_mode=WAL; PRAGMA synchronous=FULL;");
  return out;
}

Database::~Database() { sqlite3_close_v2(db_); }

Statement Database::prepare(std::string_view sql) { return Statement(db_, sql); }

void Database::exec(std::string_view sql) {
  char* err = nullptr;
  const std::string owned(sql);
  if (sqlite3_exec(db_, owned.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
    std::string why = err ? err : "unknown";
    sqlite3_free(err);
    fail(Errc::storage_failure, "sql: " + why);
  }
}

std::int64_t Database::changes() const { return sqlite3_changes(db_); }

void Database::rollback() noexcept {
  sqlite3_exec(db_, "ROLLBACK", nullptr, nullptr, nullptr);
}

// ---------------------------------------------------------------------------

BlobStore::BlobStore(fs::path dir, std::size_t max_bytes) : dir_(std::move(dir)), max_bytes_(max_bytes) {}

std::optional<Hash32> BlobStore::hash_of(std::string_view ref) {
  if (ref.size() < 66 || ref[64] != '.') return std::nullopt;
  for (char c : ref.substr(65)) {
    if (!((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9'))) return std::nullopt;
  }
  for (char c : ref.substr(0, 64)) {
    if (!((c >= 'a' && c <= 'f') || (c >= '0' && c <= '9'))) return std::nullopt;
  }
  return array_from_hex<32>(ref.substr(0, 64));
}

fs::path BlobStore::path_for(std::string_view ref) const {
  if (!hash_of(ref)) fail(Errc::invalid_argument, "malformed blob ref");
  return dir_ / std::string(ref);
}

std::string BlobStore::put(ByteView bytes, std::string_view ext) {
  if (bytes.size() > max_bytes_) fail(Errc::too_large, "blob exceeds " + std::to_string(max_bytes_) + " bytes");
  const std::string ref = to_hex(sha256(bytes)) + std::string(ext);
  const fs::path target = path_for(ref);
  if (fs::exists(target)) return ref;
  write_file_atomic(target, bytes, 0644);
  return ref;
}

Bytes BlobStore::get(std::string_view ref) const {
  const auto expected = hash_of(ref);
  if (!expected) fail(Errc::not_found, "malformed blob ref");
  std::ifstream in(dir_ / std::string(ref), std::ios::binary);
  if (!in) fail(Errc::not_found, "no blob " + std::string(ref));
  Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (sha256(bytes) != *expected) fail(Errc::corrupt_blob, "blob " + std::string(ref) + " fails its hash check");
  return bytes;
}

bool BlobStore::contains(std::string_view ref) const { return hash_of(ref) && fs::exists(dir_ / std::string(ref)); }

void BlobStore::remove(std::string_view ref) {
  std::error_code ec;
  fs::remove(path_for(ref), ec);
}

// ---------------------------------------------------------------------------

std::optional<int> read_schema_version(const fs::path& data_dir) {
  const fs::path file = data_dir / kRecordsFile;
  if (!fs::exists(file)) return std::nullopt;
  // Without a live WAL, immutable=1 keeps the probe from creating -shm/-wal
  // files next to a database this build may refuse to touch.
  const bool live_wal = fs::exists(file.string() + "-wal");
  std::string uri = "file:";
  for (char ch : file.string()) {
    if (ch == '%' || ch == '?' || ch == '#') {
      char buf[4];
      std::snprintf(buf, sizeof buf, "%%%02X", static_cast<unsigned char>(ch));
      uri += buf;
    } else {
      uri += ch;
    }
  }
  if (!live_wal) uri += "?immutable=1";
  sqlite3* db = nullptr;
  if (sqlite3_open_v2(uri.c_str(), &db, SQLITE_OPEN_READONLY | SQLITE_OPEN_URI, nullptr) != SQLITE_OK) {
    sqlite3_close(db);
    fail(Errc::storage_failure, "cannot read " + file.string());
  }
  std::optional<int> version;
  sqlite3_stmt* st = nullptr;
  if (sqlite3_prepare_v2(db, "SELECT value FROM meta WHERE key = 'schema_version'", -1, &st, nullptr) == SQLITE_OK &&
      sqlite3_step(st) == SQLITE_ROW) {
    version = std::stoi(reinterpret_cast<const char*>(sqlite3_column_text(st, 0)));
  }
  sqlite3_finalize(st);
  sqlite3_close(db);
  return version;
}

Store::Store(fs::path dir, std::unique_ptr<Database> db, BlobStore blobs, std::unique_ptr<Ledger> ledger,
             KeyPair translator)
    : dir_(std::move(dir)),
      db_(std::move(db)),
      blobs_(std::move(blobs)),
      ledger_(std::move(ledger)),
      translator_(std::move(translator)) {}

std::unique_ptr<Store> Store::open(const fs::path& data_dir, StoreOptions options) {
  crypto_init();
  if (auto version = read_schema_version(data_dir); version && *version != kSchemaVersion) {
    fail(Errc::schema_mismatch, "records schema version " + std::to_string(*version) + ", this build supports " +
                                    std::to_string(kSchemaVersion));
  }
  std::error_code ec;
  fs::create_directories(data_dir / "blobs", ec);
  if (ec) fail(Errc::unwritable, "cannot create " + data_dir.string() + ": " + ec.message());
  if (::access(data_dir.c_str(), W_OK) != 0) fail(Errc::unwritable, data_dir.string() + " is not writable");

  auto db = Database::open(data_dir / kRecordsFile);
  db->transaction([](Database& d) {
    d.exec(kSchema);
    d.prepare("INSERT OR IGNORE INTO meta (key, value) VALUES ('schema_version', ?)")
        .bind(1, std::to_string(kSchemaVersion))
        .run();
  });
  auto translator = load_or_create_node_keys(data_dir / kNodeKeysFile);
  auto ledger = Ledger::open(data_dir / kChainFile, std::move(options.ledger));
  return std::unique_ptr<Store>(new Store(data_dir, std::move(db), BlobStore(data_dir / "blobs", options.max_blob_bytes),
                                          std::move(ledger), std::move(translator)));
}

}  // namespace vnode
