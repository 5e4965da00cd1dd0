#pragma once

#include <array>
#include <compare>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "vnode/bytes.hpp"
#include "vnode/crypto.hpp"

namespace vnode {

struct Address {
  std::array<std::uint8_t, 20> bytes{};

  /// "0x" + 40 lowercase hex digits.
  std::string to_string() const;
  static std::optional<Address> parse(std::string_view text);

  friend auto operator<=>(const Address&, const Address&) = default;
};

/// Last 20 bytes of SHA-256(public_key). Throws bad_key_length unless the key
/// is exactly 32 bytes.
Address derive_address(ByteView public_key);

enum class TxKind : std::uint8_t { post = 0x01, translation = 0x02, registration = 0x03 };

std::string_view tx_kind_name(TxKind kind);
bool is_known_tx_kind(std::uint8_t raw);

constexpr std::uint8_t kTxVersion = 0x01;
constexpr std::uint8_t kBlockVersion = 0x01;
constexpr std::size_t kTxPrefixSize = 42;
constexpr std::size_t kBlockHeaderSize = 85;
constexpr std::size_t kDefaultMaxPayload = 64u * 1024;
constexpr std::array<char, 4> kChainMagic{'V', 'D', 'L', '1'};

struct Transaction {
  std::uint8_t version = kTxVersion;
  TxKind kind = TxKind::post;
  Address sender;
  std::uint64_t nonce = 0;
  std::uint64_t timestamp_ms = 0;
  Bytes payload;
  PublicKey public_key{};
  Signature signature{};

  /// version | kind | sender | nonce | timestamp | payload_len | payload
  Bytes canonical_bytes() const;
  /// canonical_bytes | public_key | signature (chain file form).
  Bytes encode() const;

  friend bool operator==(const Transaction&, const Transaction&) = default;
};

Hash32 tx_hash(const Transaction& tx);

/// Flat hash over the concatenated transaction hashes, in block order.
Hash32 tx_root(std::span<const Hash32> hashes);

struct BlockHeader {
  std::uint8_t version = kBlockVersion;
  std::uint64_t height = 0;
  Hash32 prev_hash{};
  std::uint64_t timestamp_ms = 0;
  std::uint32_t tx_count = 0;
  Hash32 tx_root{};

  Bytes encode() const;

  friend bool operator==(const BlockHeader&, const BlockHeader&) = default;
};

Hash32 block_hash(const BlockHeader& header);

struct Block {
  BlockHeader header;
  std::vector<Transaction> transactions;

  Hash32 hash() const { return block_hash(header); }
  Bytes encode() const;

  friend bool operator==(const Block&, const Block&) = default;
};

Block genesis_block();

using Wei = unsigned __int128;

std::string wei_to_string(Wei wei);
/// Decimal ETH rendering with trailing zeros trimmed, e.g. "0.000003588".
std::string wei_to_eth(Wei wei);

struct GasSchedule {
  std::uint64_t base_gas = 21000;
  std::uint64_t gas_per_nonzero_payload_byte = 68;
  std::uint64_t gas_per_zero_payload_byte = 4;
  std::uint64_t gas_price_wei = 115'000'000;

  std::uint64_t gas_used(ByteView payload) const;
  Wei cost_wei(std::uint64_t gas) const { return static_cast<Wei>(gas) * gas_price_wei; }
  void validate() const;
};

struct Receipt {
  Hash32 tx_hash{};
  std::uint64_t block_height = 0;
  Hash32 block_hash{};
  std::uint64_t gas_used = 0;
  Wei cost_wei = 0;

  friend bool operator==(const Receipt&, const Receipt&) = default;
};

struct TxRecord {
  Transaction tx;
  Receipt receipt;
};

struct VerificationError {
  std::uint64_t height = 0;
  std::string reason;
};

struct VerificationReport {
  bool ok = true;
  std::uint64_t blocks_checked = 0;
  std::optional<VerificationError> first_error;
};

/// Result of decoding a chain file without judging its contents.
struct ChainScan {
  std::vector<Block> blocks;
  /// Set when a frame could not be decoded; height is the frame's index.
  std::optional<VerificationError> framing_error;
  /// The undecodable frame is the last one and runs past end of file.
  bool torn_tail = false;
  /// Byte length of the magic plus all cleanly decoded frames.
  std::size_t clean_length = 0;
};

ChainScan scan_chain(ByteView file_bytes);
Bytes encode_frame(const Block& block);

/// Semantic verification of blocks[from..=to]. Blocks before `from` seed the
/// prev-link and nonce state. Throws range_out_of_bounds.
VerificationReport verify_blocks(std::span<const Block> blocks, std::uint64_t from, std::uint64_t to);

/// Decode and verify a chain file; framing damage is reported at the height of
/// the damaged frame. `to` defaults to the last frame.
VerificationReport verify_chain_file(const std::filesystem::path& path, std::uint64_t from = 0,
                                     std::optional<std::uint64_t> to = std::nullopt);

struct BlockPolicy {
  /// 0 seals one block per transaction immediately.
  std::uint64_t batch_interval_ms = 0;
};

struct LedgerOptions {
  GasSchedule gas;
  std::size_t max_payload = kDefaultMaxPayload;
  BlockPolicy policy;
  std::function<std::uint64_t()> clock;  // unix ms; system clock when empty
  /// Called with the wall time of every committed append.
  std::function<void(TxKind, double commit_ms, Wei cost)> on_commit;
};

/// Append-only hash-chained ledger persisted to a single chain file. All
/// submissions serialize through one writer; readers only see sealed blocks.
class Ledger {
 public:
  static std::unique_ptr<Ledger> open(const std::filesystem::path& chain_file, LedgerOptions options = {});
  ~Ledger();

  Ledger(const Ledger&) = delete;
  Ledger& operator=(const Ledger&) = delete;

  /// Assigns the signer's next nonce, signs, seals and persists. Throws
  /// payload_too_large or storage_failure; a failed append leaves no trace.
  Receipt submit(TxKind kind, Bytes payload, const KeyPair& signer);

  VerificationReport verify(std::uint64_t from, std::uint64_t to) const;
  VerificationReport verify_all() const;

  std::optional<TxRecord> find_transaction(const Hash32& hash) const;
  /// Throws not_found.
  TxRecord get_transaction(const Hash32& hash) const;
  /// Throws range_out_of_bounds.
  Block block(std::uint64_t height) const;
  std::uint64_t block_count() const;
  std::uint64_t next_nonce(const Address& sender) const;
  std::vector<TxRecord> transactions_of_kind(TxKind kind) const;

  const GasSchedule& gas() const { return options_.gas; }
  const std::filesystem::path& path() const { return path_; }

 private:
  struct Pending {
    Transaction tx;
    std::promise<Receipt> done;
  };
  struct TxLocation {
    std::uint64_t height;
    std::uint32_t index;
  };
  struct HashKey {
    std::size_t operator()(const Hash32& h) const noexcept;
  };

  Ledger(std::filesystem::path path, LedgerOptions options, int fd, std::vector<Block> blocks);

  std::uint64_t now_ms() const;
  Transaction make_tx(TxKind kind, Bytes payload, const KeyPair& signer, std::uint64_t nonce);
  // Caller holds write_mu_.
  std::vector<Receipt> seal_locked(std::vector<Transaction> txs);
  void index_block_locked(const Block& block);
  void sealer_loop();

  std::filesystem::path path_;
  LedgerOptions options_;
  int fd_ = -1;

  std::mutex write_mu_;
  mutable std::shared_mutex state_mu_;
  std::vector<Block> blocks_;
  std::vector<Hash32> block_hashes_;
  std::unordered_map<Hash32, TxLocation, HashKey> tx_index_;
  std::map<Address, std::uint64_t> committed_nonces_;

  // Batch mode only.
  std::map<Address, std::uint64_t> pending_nonces_;
  std::vector<std::shared_ptr<Pending>> pending_;
  std::condition_variable_any sealer_cv_;
  bool stopping_ = false;
  std::thread sealer_;
};

}  // namespace vnode

namespace vnode {

std::optional<Wei> parse_wei(std::string_view decimal);

}  // namespace vnode
