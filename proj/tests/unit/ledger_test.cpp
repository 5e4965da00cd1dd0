#include <gtest/gtest.h>

#include <signal.h>
#include <sys/resource.h>

#include <thread>

#include "golden.hpp"
#include "support.hpp"
#include "vnode/error.hpp"
#include "vnode/ledger.hpp"

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

Bytes payload_of(std::string_view s) { return Bytes(s.begin(), s.end()); }

// Byte offset of each frame (its length prefix) in a chain file.
std::vector<std::size_t> frame_offsets(const std::vector<Block>& blocks) {
  std::vector<std::size_t> out;
  std::size_t pos = 4;
  for (const auto& b : blocks) {
    out.push_back(pos);
    pos += encode_frame(b).size();
  }
  return out;
}

std::vector<Block> read_blocks(const std::filesystem::path& chain) {
  const auto bytes = testing_support::read_file(chain);
  return scan_chain(to_bytes(bytes)).blocks;
}

struct LedgerFixture : ::testing::Test {
  TempDir dir;
  std::filesystem::path chain = dir / "chain.vdl";
  KeyPair alice = KeyPair::generate();
  KeyPair bob = KeyPair::generate();
};

}  // namespace

TEST(LedgerGolden, FixtureTransactionHash) {
  Transaction tx;
  tx.kind = TxKind::post;
  ASSERT_EQ(tx.canonical_bytes().size(), kTxPrefixSize);
  EXPECT_EQ(to_hex(tx_hash(tx)), golden::kFixtureTxHash);
}

TEST(LedgerGolden, EmptyTxRootAndGenesis) {
  EXPECT_EQ(to_hex(tx_root({})), golden::kEmptyTxRoot);
  auto g = genesis_block();
  EXPECT_EQ(g.header.encode().size(), kBlockHeaderSize);
  EXPECT_EQ(to_hex(g.hash()), golden::kGenesisHash);
}

TEST(LedgerGolden, AddressDerivation) {
  EXPECT_EQ(derive_address(Bytes(32, 0)).to_string(), std::string("0x") + golden::kAddressOfZeroKey);
  EXPECT_EQ(derive_address(Bytes(32, 1)).to_string(), std::string("0x") + golden::kAddressOfOnesKey);
  EXPECT_EQ(derive_address(*from_hex(golden::kRfcPublicKey)).to_string(), std::string("0x") + golden::kRfc8032Address);
  EXPECT_EQ(error_of([] { derive_address(Bytes(31, 0)); }), Errc::bad_key_length);
  auto parsed = Address::parse(std::string("0x") + golden::kAddressOfZeroKey);
  ASSERT_TRUE(parsed);
  EXPECT_EQ(*parsed, derive_address(Bytes(32, 0)));
  EXPECT_FALSE(Address::parse("0x1234"));
}

TEST(LedgerHashing, SignatureExcludedPayloadIncluded) {
  Transaction tx;
  tx.payload = payload_of("abc");
  auto h = tx_hash(tx);
  tx.signature[5] = 9;
  tx.public_key[1] = 3;
  EXPECT_EQ(tx_hash(tx), h);
  tx.payload[1] ^= 1;
  EXPECT_NE(tx_hash(tx), h);
}

TEST(LedgerHashing, TxRootIsOrderSensitive) {
  Hash32 a = sha256("a"), b = sha256("b");
  std::vector<Hash32> ab{a, b}, ba{b, a};
  EXPECT_NE(tx_root(ab), tx_root(ba));
}

TEST(LedgerCost, ScheduleArithmetic) {
  GasSchedule g;
  EXPECT_EQ(g.gas_used({}), 21000u);
  Bytes nonzero(150, 0x41);
  EXPECT_EQ(g.gas_used(nonzero), golden::kCostGas150);
  EXPECT_EQ(wei_to_string(g.cost_wei(g.gas_used(nonzero))), std::to_string(golden::kCostWei150));
  EXPECT_EQ(wei_to_eth(g.cost_wei(g.gas_used(nonzero))), "0.000003588");
  EXPECT_EQ(g.gas_used(Bytes{0, 0, 1}), 21000u + 4 + 4 + 68);
  EXPECT_EQ(wei_to_eth(0), "0");
  EXPECT_EQ(wei_to_eth(Wei{1'000'000'000'000'000'000ULL}), "1");
  EXPECT_EQ(parse_wei("3588000000000"), Wei{3588000000000ULL});
  EXPECT_FALSE(parse_wei("12x"));
}

TEST(LedgerCost, GasMonotonicInLength) {
  GasSchedule g;
  for (std::uint8_t v : {0, 7}) {
    std::uint64_t last = 0;
    for (std::size_t n = 0; n < 200; ++n) {
      auto gas = g.gas_used(Bytes(n, v));
      EXPECT_GE(gas, last);
      last = gas;
    }
  }
}

TEST(LedgerCost, ZeroFieldsRejected) {
  GasSchedule g;
  g.gas_price_wei = 0;
  EXPECT_EQ(error_of([&] { g.validate(); }), Errc::config_error);
}

TEST_F(LedgerFixture, FreshChainHoldsOnlyGenesis) {
  auto ledger = Ledger::open(chain);
  EXPECT_EQ(ledger->block_count(), 1u);
  EXPECT_EQ(ledger->block(0), genesis_block());
  EXPECT_EQ(testing_support::read_file(chain).size(), 4 + encode_frame(genesis_block()).size());
  ledger.reset();
  EXPECT_EQ(Ledger::open(chain)->block(0).hash(), genesis_block().hash());
}

TEST_F(LedgerFixture, SubmissionsChainAndCountNonces) {
  auto ledger = Ledger::open(chain);
  auto r0 = ledger->submit(TxKind::post, payload_of("one"), alice);
  auto r1 = ledger->submit(TxKind::post, payload_of("two"), alice);
  auto rb = ledger->submit(TxKind::registration, payload_of("bob"), bob);
  EXPECT_EQ(r0.block_height, 1u);
  EXPECT_EQ(r1.block_height, 2u);
  EXPECT_EQ(ledger->block(2).header.prev_hash, ledger->block(1).hash());
  EXPECT_EQ(ledger->block(1).transactions[0].nonce, 0u);
  EXPECT_EQ(ledger->block(2).transactions[0].nonce, 1u);
  EXPECT_EQ(ledger->block(3).transactions[0].nonce, 0u);
  EXPECT_EQ(ledger->next_nonce(derive_address(alice.public_key())), 2u);
  EXPECT_EQ(rb.gas_used, 21000u + 3 * 68);
  EXPECT_EQ(rb.cost_wei, ledger->gas().cost_wei(rb.gas_used));
  EXPECT_EQ(ledger->transactions_of_kind(TxKind::post).size(), 2u);
  EXPECT_TRUE(ledger->verify_all().ok);
}

TEST_F(LedgerFixture, ReadYourWritesAndRestart) {
  Receipt r;
  Transaction tx;
  {
    auto ledger = Ledger::open(chain);
    r = ledger->submit(TxKind::post, payload_of("durable"), alice);
    auto rec = ledger->get_transaction(r.tx_hash);
    EXPECT_EQ(rec.receipt, r);
    EXPECT_EQ(rec.tx.payload, payload_of("durable"));
    tx = rec.tx;
    Hash32 random = sha256("nothing");
    EXPECT_FALSE(ledger->find_transaction(random));
    EXPECT_EQ(error_of([&] { ledger->get_transaction(random); }), Errc::not_found);
  }
  auto reopened = Ledger::open(chain);
  auto rec = reopened->get_transaction(r.tx_hash);
  EXPECT_EQ(rec.receipt, r);
  EXPECT_EQ(rec.tx, tx);
  EXPECT_EQ(reopened->next_nonce(derive_address(alice.public_key())), 1u);
}

TEST_F(LedgerFixture, PayloadLimit) {
  auto ledger = Ledger::open(chain);
  EXPECT_EQ(error_of([&] { ledger->submit(TxKind::post, Bytes(kDefaultMaxPayload + 1, 1), alice); }),
            Errc::payload_too_large);
  EXPECT_NO_THROW(ledger->submit(TxKind::post, Bytes(kDefaultMaxPayload, 1), alice));
}

TEST_F(LedgerFixture, HonestHundredBlockChainVerifies) {
  auto ledger = Ledger::open(chain);
  for (int i = 0; i < 99; ++i) ledger->submit(TxKind::post, payload_of("p" + std::to_string(i)), i % 2 ? alice : bob);
  auto report = ledger->verify_all();
  EXPECT_TRUE(report.ok);
  EXPECT_EQ(report.blocks_checked, 100u);
  EXPECT_EQ(ledger->verify(10, 20).blocks_checked, 11u);
  EXPECT_EQ(error_of([&] { ledger->verify(5, 100); }), Errc::range_out_of_bounds);
  EXPECT_EQ(error_of([&] { ledger->verify(6, 5); }), Errc::range_out_of_bounds);
}

TEST_F(LedgerFixture, PayloadFlipNamesItsBlock) {
  {
    auto ledger = Ledger::open(chain);
    for (int i = 0; i < 10; ++i) ledger->submit(TxKind::post, payload_of("payload " + std::to_string(i)), alice);
  }
  auto blocks = read_blocks(chain);
  auto offsets = frame_offsets(blocks);
  auto bytes = testing_support::read_file(chain);
  bytes[offsets[7] + 4 + kBlockHeaderSize + kTxPrefixSize] ^= 0x20;
  testing_support::write_file(chain, bytes);
  auto report = verify_chain_file(chain);
  ASSERT_FALSE(report.ok);
  EXPECT_EQ(report.first_error->height, 7u);
  EXPECT_NE(report.first_error->reason.find("tx_root"), std::string::npos) << report.first_error->reason;
  EXPECT_EQ(error_of([&] { Ledger::open(chain); }), Errc::storage_failure);
}

TEST_F(LedgerFixture, SwappedSignaturesFail) {
  {
    auto ledger = Ledger::open(chain);
    for (int i = 0; i < 5; ++i) ledger->submit(TxKind::post, payload_of("s" + std::to_string(i)), alice);
  }
  auto blocks = read_blocks(chain);
  std::swap(blocks[3].transactions[0].signature, blocks[4].transactions[0].signature);
  auto report = verify_blocks(blocks, 0, blocks.size() - 1);
  ASSERT_FALSE(report.ok);
  EXPECT_EQ(report.first_error->height, 3u);
  EXPECT_NE(report.first_error->reason.find("signature"), std::string::npos);
}

TEST_F(LedgerFixture, NonceGapDetected) {
  {
    auto ledger = Ledger::open(chain);
    for (int i = 0; i < 3; ++i) ledger->submit(TxKind::post, payload_of("n"), alice);
  }
  auto blocks = read_blocks(chain);
  // Re-sign block 2's transaction with a skipped nonce and rebuild the chain tail.
  auto& tx = blocks[2].transactions[0];
  tx.nonce = 5;
  tx.signature = alice.sign(tx_hash(tx));
  blocks[2].header.tx_root = tx_root(std::vector<Hash32>{tx_hash(tx)});
  blocks[3].header.prev_hash = blocks[2].hash();
  auto report = verify_blocks(blocks, 0, blocks.size() - 1);
  ASSERT_FALSE(report.ok);
  EXPECT_EQ(report.first_error->height, 2u);
  EXPECT_NE(report.first_error->reason.find("nonce"), std::string::npos);
}

TEST_F(LedgerFixture, FailedAppendLeavesNoTrace) {
  auto ledger = Ledger::open(chain);
  ledger->submit(TxKind::post, payload_of("before"), alice);
  const auto size_before = std::filesystem::file_size(chain);

  struct rlimit old {};
  ::getrlimit(RLIMIT_FSIZE, &old);
  auto old_handler = ::signal(SIGXFSZ, SIG_IGN);
  struct rlimit tight = old;
  tight.rlim_cur = size_before + 16;
  ASSERT_EQ(::setrlimit(RLIMIT_FSIZE, &tight), 0);
  Errc code = error_of([&] { ledger->submit(TxKind::post, Bytes(500, 7), alice); });
  ::setrlimit(RLIMIT_FSIZE, &old);
  ::signal(SIGXFSZ, old_handler);

  EXPECT_EQ(code, Errc::storage_failure);
  EXPECT_EQ(std::filesystem::file_size(chain), size_before);
  EXPECT_EQ(ledger->block_count(), 2u);
  EXPECT_EQ(ledger->next_nonce(derive_address(alice.public_key())), 1u);
  auto r = ledger->submit(TxKind::post, payload_of("after"), alice);
  EXPECT_EQ(r.block_height, 2u);
  ledger.reset();
  EXPECT_TRUE(verify_chain_file(chain).ok);
}

TEST_F(LedgerFixture, TornTailIsSetAsideOnOpen) {
  {
    auto ledger = Ledger::open(chain);
    ledger->submit(TxKind::post, payload_of("kept"), alice);
  }
  const auto clean = testing_support::read_file(chain);
  std::string torn = clean;
  torn += std::string("\x00\x00\x01\x00partial", 11);
  testing_support::write_file(chain, torn);
  auto ledger = Ledger::open(chain);
  EXPECT_EQ(ledger->block_count(), 2u);
  EXPECT_EQ(testing_support::read_file(chain), clean);
  EXPECT_TRUE(std::filesystem::exists(dir / "chain.vdl.torn"));
}

TEST_F(LedgerFixture, SecondWriterRefused) {
  auto ledger = Ledger::open(chain);
  EXPECT_EQ(error_of([&] { Ledger::open(chain); }), Errc::storage_failure);
}

TEST_F(LedgerFixture, BatchPolicyGroupsConcurrentSubmissions) {
  LedgerOptions opt;
  opt.policy.batch_interval_ms = 30;
  std::vector<Receipt> receipts(12);
  {
    auto ledger = Ledger::open(chain, opt);
    std::vector<std::thread> threads;
    for (int t = 0; t < 4; ++t) {
      threads.emplace_back([&, t] {
        const KeyPair& k = t % 2 ? alice : bob;
        for (int i = 0; i < 3; ++i) receipts[t * 3 + i] = ledger->submit(TxKind::post, payload_of("b"), k);
      });
    }
    for (auto& th : threads) th.join();
    EXPECT_LT(ledger->block_count(), 13u);
    for (const auto& r : receipts) EXPECT_TRUE(ledger->find_transaction(r.tx_hash));
    EXPECT_EQ(ledger->next_nonce(derive_address(alice.public_key())), 6u);
  }
  EXPECT_TRUE(verify_chain_file(chain).ok);
}

TEST_F(LedgerFixture, CommitCallbackSeesEveryAppend) {
  LedgerOptions opt;
  int calls = 0;
  Wei total = 0;
  opt.on_commit = [&](TxKind, double ms, Wei cost) {
    EXPECT_GE(ms, 0.0);
    ++calls;
    total += cost;
  };
  auto ledger = Ledger::open(chain, opt);
  auto r1 = ledger->submit(TxKind::post, payload_of("x"), alice);
  auto r2 = ledger->submit(TxKind::translation, payload_of("y"), bob);
  EXPECT_EQ(calls, 2);
  EXPECT_EQ(total, r1.cost_wei + r2.cost_wei);
}
