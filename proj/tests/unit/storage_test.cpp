#include <gtest/gtest.h>

#include "golden.hpp"
#include "support.hpp"
#include "vnode/error.hpp"
#include "vnode/storage.hpp"

using namespace vnode;
using testing_support::TempDir;

namespace {

Errc error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::invalid_argument;
}

std::map<std::string, std::string> snapshot(const std::filesystem::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[e.path().string()] = testing_support::read_file(e.path());
  }
  return out;
}

}  // namespace

TEST(Store, FreshLayout) {
  TempDir dir;
  auto store = init_store(dir / "node");
  EXPECT_TRUE(std::filesystem::exists(dir / "node" / "records.db"));
  EXPECT_TRUE(std::filesystem::is_directory(dir / "node" / "blobs"));
  EXPECT_TRUE(std::filesystem::exists(dir / "node" / "node_keys"));
  EXPECT_EQ(store->ledger().block_count(), 1u);
  EXPECT_EQ(to_hex(store->ledger().block(0).hash()), golden::kGenesisHash);
  EXPECT_EQ(read_schema_version(dir / "node"), kSchemaVersion);
}

TEST(Store, ReopenKeepsGenesisAndTranslatorKey) {
  TempDir dir;
  PublicKey key;
  {
    auto store = init_store(dir.path());
    key = store->translator().public_key();
  }
  auto again = init_store(dir.path());
  EXPECT_EQ(to_hex(again->ledger().block(0).hash()), golden::kGenesisHash);
  EXPECT_EQ(again->translator().public_key(), key);
}

TEST(Store, FutureSchemaRejectedWithoutMutation) {
  TempDir dir;
  { init_store(dir.path()); }
  {
    auto db = Database::open(dir / "records.db");
    db->exec("UPDATE meta SET value = '2' WHERE key = 'schema_version'");
  }
  const auto before = snapshot(dir.path());
  EXPECT_EQ(error_of([&] { init_store(dir.path()); }), Errc::schema_mismatch);
  const auto after = snapshot(dir.path());
  EXPECT_EQ(after.size(), before.size());
  for (const auto& [path, bytes] : before) EXPECT_TRUE(after.contains(path) && after.at(path) == bytes) << path;
}

TEST(Store, UnwritableLocation) {
  TempDir dir;
  testing_support::write_file(dir / "plainfile", "x");
  EXPECT_EQ(error_of([&] { init_store(dir / "plainfile" / "node"); }), Errc::unwritable);
}

TEST(Store, TransactionsRollBackOnThrow) {
  TempDir dir;
  auto store = init_store(dir.path());
  auto& db = store->db();
  EXPECT_THROW(db.transaction([](Database& d) {
    d.exec("INSERT INTO meta(key, value) VALUES ('probe', '1')");
    throw std::runtime_error("abort");
  }),
               std::runtime_error);
  auto rows = db.read([](Database& d) {
    auto st = d.prepare("SELECT COUNT(*) FROM meta WHERE key = 'probe'");
    st.step();
    return st.int64(0);
  });
  EXPECT_EQ(rows, 0);
}

TEST(Blobs, ContentAddressedAndIdempotent) {
  TempDir dir;
  auto store = init_store(dir.path());
  auto& blobs = store->blobs();
  Bytes b{1, 2, 3, 4};
  auto ref = blobs.put(b);
  EXPECT_EQ(ref, to_hex(sha256(b)) + ".wav");
  EXPECT_EQ(blobs.put(b), ref);
  std::size_t files = 0;
  for (const auto& e : std::filesystem::directory_iterator(blobs.dir())) files += e.is_regular_file();
  EXPECT_EQ(files, 1u);
  EXPECT_EQ(blobs.get(ref), b);
  EXPECT_TRUE(blobs.contains(ref));
  EXPECT_EQ(BlobStore::hash_of(ref), sha256(b));
  EXPECT_FALSE(BlobStore::hash_of("../etc/passwd"));
}

TEST(Blobs, CorruptionAndAbsence) {
  TempDir dir;
  auto store = init_store(dir.path());
  auto& blobs = store->blobs();
  auto ref = blobs.put(to_bytes(std::string("voice")));
  auto path = blobs.dir() / ref;
  auto bytes = testing_support::read_file(path);
  bytes[0] ^= 1;
  testing_support::write_file(path, bytes);
  EXPECT_EQ(error_of([&] { blobs.get(ref); }), Errc::corrupt_blob);
  EXPECT_EQ(error_of([&] { blobs.get(to_hex(sha256("absent")) + ".wav"); }), Errc::not_found);
  EXPECT_EQ(error_of([&] { blobs.get("not-a-ref"); }), Errc::not_found);
}

TEST(Blobs, SizeLimit) {
  TempDir dir;
  StoreOptions opt;
  opt.max_blob_bytes = 8;
  auto store = init_store(dir.path(), opt);
  EXPECT_EQ(error_of([&] { store->blobs().put(Bytes(9, 1)); }), Errc::too_large);
  EXPECT_NO_THROW(store->blobs().put(Bytes(8, 1)));
}
