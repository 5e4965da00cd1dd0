#include "vnode/ledger.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstring>
#include <fstream>
#include <iostream>
#include <iterator>

#include "vnode/error.hpp"

namespace vnode {
namespace {

enum class DecodeStatus { ok, truncated };

DecodeStatus decode_tx(BeReader& in, Transaction& tx) {
  auto version = in.u8();
  auto kind = in.u8();
  auto sender = in.array<20>();
  auto nonce = in.u64();
  auto ts = in.u64();
  auto len = in.u32();
  if (!len) return DecodeStatus::truncated;
  auto payload = in.take(*len);
  auto pk = in.array<32>();
  auto sig = in.array<64>();
  if (!sig) return DecodeStatus::truncated;
  tx.version = *version;
  tx.kind = static_cast<TxKind>(*kind);
  tx.sender.bytes = *sender;
  tx.nonce = *nonce;
  tx.timestamp_ms = *ts;
  tx.payload.assign(payload->begin(), payload->end());
  tx.public_key = *pk;
  tx.signature = *sig;
  return DecodeStatus::ok;
}

// Decodes one block from the front of `data`; trailing bytes are left for the
// caller to judge.
DecodeStatus decode_block(ByteView data, Block& block, std::size_t& consumed) {
  BeReader in(data);
  auto version = in.u8();
  auto height = in.u64();
  auto prev = in.array<32>();
  auto ts = in.u64();
  auto count = in.u32();
  auto root = in.array<32>();
  if (!root) return DecodeStatus::truncated;
  block.header = {*version, *height, *prev, *ts, *count, *root};
  block.transactions.clear();
  for (std::uint32_t i = 0; i < *count; ++i) {
    // Each transaction occupies at least 138 bytes; reject absurd counts early.
    if (in.remaining() < kTxPrefixSize + 96) return DecodeStatus::truncated;
    Transaction tx;
    if (decode_tx(in, tx) != DecodeStatus::ok) return DecodeStatus::truncated;
    block.transactions.push_back(std::move(tx));
  }
  consumed = in.position();
  return DecodeStatus::ok;
}

std::string height_str(std::uint64_t h) { return std::to_string(h); }

}  // namespace

// ---------------------------------------------------------------------------
// Encodings

std::string Address::to_string() const { return "0x" + to_hex(bytes); }

std::optional<Address> Address::parse(std::string_view text) {
  if (text.size() != 42 || text[0] != '0' || (text[1] != 'x' && text[1] != 'X')) return std::nullopt;
  auto raw = array_from_hex<20>(text.substr(2));
  if (!raw) return std::nullopt;
  return Address{*raw};
}

Address derive_address(ByteView public_key) {
  if (public_key.size() != 32) {
    fail(Errc::bad_key_length, "public key must be 32 bytes, got " + std::to_string(public_key.size()));
  }
  const Hash32 digest = sha256(public_key);
  Address out;
  std::copy(digest.end() - 20, digest.end(), out.bytes.begin());
  return out;
}

std::string_view tx_kind_name(TxKind kind) {
  switch (kind) {
    case TxKind::post: return "post";
    case TxKind::translation: return "translation";
    case TxKind::registration: return "registration";
  }
  return "unknown";
}

bool is_known_tx_kind(std::uint8_t raw) { return raw >= 0x01 && raw <= 0x03; }

Bytes Transaction::canonical_bytes() const {
  Bytes out;
  out.reserve(kTxPrefixSize + payload.size());
  BeWriter w(out);
  w.u8(version);
  w.u8(static_cast<std::uint8_t>(kind));
  w.raw(sender.bytes);
  w.u64(nonce);
  w.u64(timestamp_ms);
  w.u32(static_cast<std::uint32_t>(payload.size()));
  w.raw(payload);
  return out;
}

Bytes Transaction::encode() const {
  Bytes out = canonical_bytes();
  BeWriter w(out);
  w.raw(public_key);
  w.raw(signature);
  return out;
}

Hash32 tx_hash(const Transaction& tx) { return sha256(tx.canonical_bytes()); }

Hash32 tx_root(std::span<const Hash32> hashes) {
  Bytes concat;
  concat.reserve(hashes.size() * 32);
  for (const auto& h : hashes) concat.insert(concat.end(), h.begin(), h.end());
  return sha256(concat);
}

Bytes BlockHeader::encode() const {
  Bytes out;
  out.reserve(kBlockHeaderSize);
  BeWriter w(out);
  w.u8(version);
  w.u64(height);
  w.raw(prev_hash);
  w.u64(timestamp_ms);
  w.u32(tx_count);
  w.raw(tx_root);
  return out;
}

Hash32 block_hash(const BlockHeader& header) { return sha256(header.encode()); }

Bytes Block::encode() const {
  Bytes out = header.encode();
  for (const auto& tx : transactions) {
    auto t = tx.encode();
    out.insert(out.end(), t.begin(), t.end());
  }
  return out;
}

Block genesis_block() {
  Block g;
  g.header.tx_root = tx_root({});
  return g;
}

Bytes encode_frame(const Block& block) {
  Bytes body = block.encode();
  Bytes out;
  out.reserve(body.size() + 4);
  BeWriter w(out);
  w.u32(static_cast<std::uint32_t>(body.size()));
  w.raw(body);
  return out;
}

std::string wei_to_string(Wei wei) {
  if (wei == 0) return "0";
  std::string out;
  while (wei > 0) {
    out.push_back(static_cast<char>('0' + static_cast<int>(wei % 10)));
    wei /= 10;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::string wei_to_eth(Wei wei) {
  std::string digits = wei_to_string(wei);
  if (digits.size() <= 18) digits.insert(0, 19 - digits.size(), '0');
  std::string whole = digits.substr(0, digits.size() - 18);
  std::string frac = digits.substr(digits.size() - 18);
  while (!frac.empty() && frac.back() == '0') frac.pop_back();
  return frac.empty() ? whole : whole + "." + frac;
}

std::uint64_t GasSchedule::gas_used(ByteView payload) const {
  std::uint64_t gas = base_gas;
  for (auto b : payload) gas += b == 0 ? gas_per_zero_payload_byte : gas_per_nonzero_payload_byte;
  return gas;
}

void GasSchedule::validate() const {
  if (base_gas == 0 || gas_per_nonzero_payload_byte == 0 || gas_per_zero_payload_byte == 0 || gas_price_wei == 0) {
    fail(Errc::config_error, "gas schedule fields must all be positive");
  }
}

// ---------------------------------------------------------------------------
// Scanning and verification

ChainScan scan_chain(ByteView file) {
  ChainScan scan;
  if (file.size() < kChainMagic.size() || !std::equal(kChainMagic.begin(), kChainMagic.end(), file.begin())) {
    scan.framing_error = VerificationError{0, "bad chain file magic"};
    return scan;
  }
  std::size_t pos = kChainMagic.size();
  scan.clean_length = pos;
  while (pos < file.size()) {
    const std::uint64_t index = scan.blocks.size();
    if (file.size() - pos < 4) {
      scan.framing_error = VerificationError{index, "truncated frame length at block " + height_str(index)};
      scan.torn_tail = true;
      return scan;
    }
    BeReader lenr(file.subspan(pos, 4));
    const std::uint32_t len = *lenr.u32();
    const std::size_t body = pos + 4;
    Block block;
    std::size_t consumed = 0;
    if (len > file.size() - body) {
      // A crash can leave a prefix of the final frame, never a whole block.
      const bool whole = decode_block(file.subspan(body), block, consumed) == DecodeStatus::ok;
      scan.framing_error = VerificationError{index, "frame length exceeds file at block " + height_str(index)};
      scan.torn_tail = !whole;
      return scan;
    }
    auto status = decode_block(file.subspan(body, len), block, consumed);
    if (status != DecodeStatus::ok) {
      scan.framing_error = VerificationError{index, "truncated block body at block " + height_str(index)};
      return scan;
    }
    if (consumed != len) {
      scan.framing_error = VerificationError{index, "frame length mismatch at block " + height_str(index)};
      return scan;
    }
    scan.blocks.push_back(std::move(block));
    pos = body + len;
    scan.clean_length = pos;
  }
  return scan;
}

VerificationReport verify_blocks(std::span<const Block> blocks, std::uint64_t from, std::uint64_t to) {
  if (from > to || to >= blocks.size()) {
    fail(Errc::range_out_of_bounds, "range [" + height_str(from) + ", " + height_str(to) +
                                        "] outside chain of " + height_str(blocks.size()) + " blocks");
  }
  std::map<Address, std::uint64_t> nonces;
  for (std::uint64_t h = 0; h < from; ++h) {
    for (const auto& tx : blocks[h].transactions) ++nonces[tx.sender];
  }
  Hash32 prev = from == 0 ? Hash32{} : blocks[from - 1].hash();

  VerificationReport report;
  auto reject = [&](std::uint64_t h, std::string reason) {
    report.ok = false;
    report.first_error = VerificationError{h, std::move(reason)};
    return report;
  };

  for (std::uint64_t h = from; h <= to; ++h) {
    const Block& b = blocks[h];
    const BlockHeader& hdr = b.header;
    report.blocks_checked = h - from + 1;

    if (hdr.version != kBlockVersion) return reject(h, "unsupported block version");
    if (hdr.height != h) return reject(h, "height field " + height_str(hdr.height) + " at position " + height_str(h));
    if (hdr.prev_hash != prev) return reject(h, "prev_hash does not match hash of block " + height_str(h - 1));
    if (hdr.tx_count != b.transactions.size()) return reject(h, "tx_count disagrees with body");
    if (h == 0 && (hdr.tx_count != 0 || hdr.timestamp_ms != 0)) {
      return reject(h, "genesis block must be empty with timestamp 0");
    }
    if (h > 0 && hdr.tx_count == 0) return reject(h, "empty non-genesis block");

    std::vector<Hash32> hashes;
    hashes.reserve(b.transactions.size());
    for (const auto& tx : b.transactions) hashes.push_back(tx_hash(tx));
    if (tx_root(hashes) != hdr.tx_root) return reject(h, "tx_root mismatch: recomputed tx hashes differ");

    std::uint64_t newest = 0;
    for (std::size_t i = 0; i < b.transactions.size(); ++i) {
      const Transaction& tx = b.transactions[i];
      const std::string where = "tx " + std::to_string(i) + ": ";
      if (tx.version != kTxVersion) return reject(h, where + "unsupported transaction version");
      if (!is_known_tx_kind(static_cast<std::uint8_t>(tx.kind))) return reject(h, where + "unknown transaction kind");
      if (derive_address(tx.public_key) != tx.sender) return reject(h, where + "sender address does not match public key");
      if (!verify_signature(tx.signature, hashes[i], tx.public_key)) {
        return reject(h, where + "signature does not verify over tx hash");
      }
      auto& expected = nonces[tx.sender];
      if (tx.nonce != expected) {
        return reject(h, where + "nonce " + std::to_string(tx.nonce) + " expected " + std::to_string(expected));
      }
      ++expected;
      newest = std::max(newest, tx.timestamp_ms);
    }
    if (h > 0 && hdr.timestamp_ms != newest) return reject(h, "block timestamp differs from newest transaction");
    prev = b.hash();
  }
  return report;
}

VerificationReport verify_chain_file(const std::filesystem::path& path, std::uint64_t from,
                                     std::optional<std::uint64_t> to) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::not_found, "cannot open chain file " + path.string());
  Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  ChainScan scan = scan_chain(bytes);

  const std::uint64_t decoded = scan.blocks.size();
  // A damaged frame still occupies a height.
  const std::uint64_t known = decoded + (scan.framing_error ? 1 : 0);
  if (known == 0) fail(Errc::range_out_of_bounds, "chain file has no blocks");
  const std::uint64_t last = to.value_or(known - 1);
  if (from > last || last >= known) {
    fail(Errc::range_out_of_bounds, "range [" + height_str(from) + ", " + height_str(last) + "] outside chain of " +
                                        height_str(known) + " blocks");
  }
  VerificationReport report;
  if (decoded > 0 && from < decoded) {
    report = verify_blocks(scan.blocks, from, std::min(last, decoded - 1));
    if (!report.ok) return report;
  }
  if (scan.framing_error && last >= decoded) {
    report.ok = false;
    report.blocks_checked = decoded - from + 1;
    report.first_error = scan.framing_error;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Ledger

std::size_t Ledger::HashKey::operator()(const Hash32& h) const noexcept {
  std::size_t v = 0;
  std::memcpy(&v, h.data(), sizeof v);
  return v;
}

namespace {

void write_all(int fd, ByteView data) {
  std::size_t off = 0;
  while (off < data.size()) {
    ssize_t n = ::write(fd, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(Errc::storage_failure, std::string("chain append failed: ") + std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
}

void create_chain_file(const std::filesystem::path& path) {
  const auto tmp = path.string() + ".tmp";
  int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) fail(Errc::unwritable, "cannot create " + tmp + ": " + std::strerror(errno));
  try {
    Bytes content(kChainMagic.begin(), kChainMagic.end());
    auto frame = encode_frame(genesis_block());
    content.insert(content.end(), frame.begin(), frame.end());
    write_all(fd, content);
    if (::fsync(fd) != 0) fail(Errc::unwritable, "fsync failed on " + tmp);
  } catch (...) {
    ::close(fd);
    throw;
  }
  ::close(fd);
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(Errc::unwritable, "cannot install chain file: " + ec.message());
}

}  // namespace

std::unique_ptr<Ledger> Ledger::open(const std::filesystem::path& chain_file, LedgerOptions options) {
  options.gas.validate();
  if (!std::filesystem::exists(chain_file)) create_chain_file(chain_file);

  int fd = ::open(chain_file.c_str(), O_WRONLY | O_APPEND | O_CLOEXEC);
  if (fd < 0) fail(Errc::unwritable, "cannot open " + chain_file.string() + " for append");
  struct FdGuard {
    int& fd;
    ~FdGuard() {
      if (fd >= 0) ::close(fd);
    }
  } guard{fd};
  // One writer per chain file, across processes too.
  if (::flock(fd, LOCK_EX | LOCK_NB) != 0) {
    fail(Errc::storage_failure, chain_file.string() + " is in use by another process");
  }

  Bytes bytes;
  {
    std::ifstream in(chain_file, std::ios::binary);
    if (!in) fail(Errc::storage_failure, "cannot read " + chain_file.string());
    bytes.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  ChainScan scan = scan_chain(bytes);
  if (scan.framing_error) {
    if (!scan.torn_tail) {
      fail(Errc::storage_failure, "chain file damaged at height " + height_str(scan.framing_error->height) + ": " +
                                      scan.framing_error->reason);
    }
    // Interrupted append: keep the torn bytes aside, then cut them off.
    const auto aside = chain_file.string() + ".torn";
    std::ofstream(aside, std::ios::binary)
        .write(reinterpret_cast<const char*>(bytes.data() + scan.clean_length),
               static_cast<std::streamsize>(bytes.size() - scan.clean_length));
    std::filesystem::resize_file(chain_file, scan.clean_length);
    std::cerr << "ledger: discarded torn tail of " << bytes.size() - scan.clean_length << " bytes (saved to " << aside
              << ")\n";
  }
  if (scan.blocks.empty() || scan.blocks.front() != genesis_block()) {
    fail(Errc::storage_failure, "chain file does not start with the genesis block");
  }
  auto report = verify_blocks(scan.blocks, 0, scan.blocks.size() - 1);
  if (!report.ok) {
    fail(Errc::storage_failure, "chain verification failed at height " + height_str(report.first_error->height) +
                                    ": " + report.first_error->reason);
  }

  auto ledger = std::unique_ptr<Ledger>(new Ledger(chain_file, std::move(options), fd, std::move(scan.blocks)));
  fd = -1;
  return ledger;
}

Ledger::Ledger(std::filesystem::path path, LedgerOptions options, int fd, std::vector<Block> blocks)
    : path_(std::move(path)), options_(std::move(options)), fd_(fd) {
  for (auto& b : blocks) {
    index_block_locked(b);
    blocks_.push_back(std::move(b));
  }
  if (options_.policy.batch_interval_ms > 0) sealer_ = std::thread([this] { sealer_loop(); });
}

Ledger::~Ledger() {
  if (sealer_.joinable()) {
    {
      std::lock_guard lk(write_mu_);
      stopping_ = true;
    }
    sealer_cv_.notify_all();
    sealer_.join();
  }
  if (fd_ >= 0) ::close(fd_);
}

std::uint64_t Ledger::now_ms() const {
  if (options_.clock) return options_.clock();
  return static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                        std::chrono::system_clock::now().time_since_epoch())
                                        .count());
}

void Ledger::index_block_locked(const Block& block) {
  block_hashes_.push_back(block.hash());
  for (std::uint32_t i = 0; i < block.transactions.size(); ++i) {
    const auto& tx = block.transactions[i];
    tx_index_[tx_hash(tx)] = {block.header.height, i};
    committed_nonces_[tx.sender] = tx.nonce + 1;
  }
}

Transaction Ledger::make_tx(TxKind kind, Bytes payload, const KeyPair& signer, std::uint64_t nonce) {
  Transaction tx;
  tx.kind = kind;
  tx.public_key = signer.public_key();
  tx.sender = derive_address(tx.public_key);
  tx.nonce = nonce;
  tx.timestamp_ms = now_ms();
  tx.payload = std::move(payload);
  tx.signature = signer.sign(tx_hash(tx));
  return tx;
}

std::vector<Receipt> Ledger::seal_locked(std::vector<Transaction> txs) {
  Block block;
  std::vector<Hash32> hashes;
  {
    std::shared_lock rd(state_mu_);
    block.header.height = blocks_.size();
    block.header.prev_hash = block_hashes_.back();
  }
  for (const auto& tx : txs) {
    hashes.push_back(tx_hash(tx));
    block.header.timestamp_ms = std::max(block.header.timestamp_ms, tx.timestamp_ms);
  }
  block.header.tx_count = static_cast<std::uint32_t>(txs.size());
  block.header.tx_root = tx_root(hashes);
  block.transactions = std::move(txs);

  const Bytes frame = encode_frame(block);
  const off_t before = ::lseek(fd_, 0, SEEK_END);
  try {
    write_all(fd_, frame);
    if (::fdatasync(fd_) != 0) fail(Errc::storage_failure, std::string("fdatasync failed: ") + std::strerror(errno));
  } catch (...) {
    if (before >= 0 && ::ftruncate(fd_, before) != 0) {
      std::cerr << "ledger: rollback truncate failed: " << std::strerror(errno) << "\n";
    }
    throw;
  }

  const Hash32 bh = block.hash();
  std::vector<Receipt> receipts;
  for (std::size_t i = 0; i < block.transactions.size(); ++i) {
    const auto gas = options_.gas.gas_used(block.transactions[i].payload);
    receipts.push_back({hashes[i], block.header.height, bh, gas, options_.gas.cost_wei(gas)});
  }
  std::unique_lock wr(state_mu_);
  index_block_locked(block);
  blocks_.push_back(std::move(block));
  return receipts;
}

Receipt Ledger::submit(TxKind kind, Bytes payload, const KeyPair& signer) {
  if (payload.size() > options_.max_payload) {
    fail(Errc::payload_too_large, "payload of " + std::to_string(payload.size()) + " bytes exceeds " +
                                      std::to_string(options_.max_payload));
  }
  const auto started = std::chrono::steady_clock::now();
  const Address sender = derive_address(signer.public_key());
  Receipt receipt;

  if (options_.policy.batch_interval_ms == 0) {
    std::lock_guard lk(write_mu_);
    std::uint64_t nonce = 0;
    if (auto it = committed_nonces_.find(sender); it != committed_nonces_.end()) nonce = it->second;
    receipt = seal_locked({make_tx(kind, std::move(payload), signer, nonce)}).front();
  } else {
    std::future<Receipt> done;
    {
      std::lock_guard lk(write_mu_);
      std::uint64_t nonce = 0;
      if (auto it = pending_nonces_.find(sender); it != pending_nonces_.end()) {
        nonce = it->second;
      } else if (auto c = committed_nonces_.find(sender); c != committed_nonces_.end()) {
        nonce = c->second;
      }
      auto p = std::make_shared<Pending>();
      p->tx = make_tx(kind, std::move(payload), signer, nonce);
      done = p->done.get_future();
      pending_.push_back(std::move(p));
      pending_nonces_[sender] = nonce + 1;
    }
    sealer_cv_.notify_all();
    receipt = done.get();
  }

  if (options_.on_commit) {
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    options_.on_commit(kind, ms, receipt.cost_wei);
  }
  return receipt;
}

void Ledger::sealer_loop() {
  std::unique_lock lk(write_mu_);
  const auto interval = std::chrono::milliseconds(options_.policy.batch_interval_ms);
  while (true) {
    sealer_cv_.wait_for(lk, interval, [this] { return stopping_; });
    if (!pending_.empty()) {
      auto batch = std::move(pending_);
      pending_.clear();
      std::vector<Transaction> txs;
      for (const auto& p : batch) txs.push_back(p->tx);
      try {
        auto receipts = seal_locked(std::move(txs));
        for (std::size_t i = 0; i < batch.size(); ++i) batch[i]->done.set_value(receipts[i]);
      } catch (...) {
        for (auto& p : batch) p->done.set_exception(std::current_exception());
      }
      // Every pending transaction has now either committed or failed.
      pending_nonces_.clear();
    }
    if (stopping_) return;
  }
}

VerificationReport Ledger::verify(std::uint64_t from, std::uint64_t to) const {
  std::shared_lock rd(state_mu_);
  return verify_blocks(blocks_, from, to);
}

VerificationReport Ledger::verify_all() const {
  std::shared_lock rd(state_mu_);
  return verify_blocks(blocks_, 0, blocks_.size() - 1);
}

std::optional<TxRecord> Ledger::find_transaction(const Hash32& hash) const {
  std::shared_lock rd(state_mu_);
  auto it = tx_index_.find(hash);
  if (it == tx_index_.end()) return std::nullopt;
  const auto& tx = blocks_[it->second.height].transactions[it->second.index];
  const auto gas = options_.gas.gas_used(tx.payload);
  return TxRecord{tx, Receipt{hash, it->second.height, block_hashes_[it->second.height], gas, options_.gas.cost_wei(gas)}};
}

TxRecord Ledger::get_transaction(const Hash32& hash) const {
  auto found = find_transaction(hash);
  if (!found) fail(Errc::not_found, "no transaction " + to_hex(hash));
  return *found;
}

Block Ledger::block(std::uint64_t height) const {
  std::shared_lock rd(state_mu_);
  if (height >= blocks_.size()) fail(Errc::range_out_of_bounds, "no block at height " + height_str(height));
  return blocks_[height];
}

std::uint64_t Ledger::block_count() const {
  std::shared_lock rd(state_mu_);
  return blocks_.size();
}

std::uint64_t Ledger::next_nonce(const Address& sender) const {
  std::shared_lock rd(state_mu_);
  auto it = committed_nonces_.find(sender);
  return it == committed_nonces_.end() ? 0 : it->second;
}

std::vector<TxRecord> Ledger::transactions_of_kind(TxKind kind) const {
  std::shared_lock rd(state_mu_);
  std::vector<TxRecord> out;
  for (std::size_t h = 0; h < blocks_.size(); ++h) {
    for (const auto& tx : blocks_[h].transactions) {
      if (tx.kind != kind) continue;
      const auto gas = options_.gas.gas_used(tx.payload);
      out.push_back({tx, Receipt{tx_hash(tx), h, block_hashes_[h], gas, options_.gas.cost_wei(gas)}});
    }
  }
  return out;
}

}  // namespace vnode

namespace vnode {

std::optional<Wei> parse_wei(std::string_view decimal) {
  if (decimal.empty() || decimal.size() > 39) return std::nullopt;
  Wei v = 0;
  for (char c : decimal) {
    if (c < '0' || c > '9') return std::nullopt;
    v = v * 10 + static_cast<unsigned>(c - '0');
  }
  return v;
}

}  // namespace vnode
