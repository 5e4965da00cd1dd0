// Hot paths of a node: hashing and signing transactions, sealing blocks,
// WAV parsing and the mock engine's synthesis.
#include <benchmark/benchmark.h>

#include <filesystem>
#include <random>

#include "vnode/crypto.hpp"
#include "vnode/engine.hpp"
#include "vnode/ledger.hpp"
#include "vnode/media.hpp"

namespace {

vnode::Transaction sample_tx(std::size_t payload_bytes) {
  vnode::Transaction tx;
  tx.kind = vnode::TxKind::post;
  tx.nonce = 7;
  tx.timestamp_ms = 1'700'000'000'000;
  tx.payload.assign(payload_bytes, 0x5a);
  return tx;
}

void BM_TxHash(benchmark::State& state) {
  auto tx = sample_tx(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(vnode::tx_hash(tx));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(BM_TxHash)->Arg(64)->Arg(1024)->Arg(64 * 1024);

void BM_Sign(benchmark::State& state) {
  auto key = vnode::KeyPair::generate();
  auto tx = sample_tx(256);
  const auto msg = tx.canonical_bytes();
  for (auto _ : state) benchmark::DoNotOptimize(key.sign(msg));
}
BENCHMARK(BM_Sign);

void BM_Verify(benchmark::State& state) {
  auto key = vnode::KeyPair::generate();
  const auto msg = sample_tx(256).canonical_bytes();
  const auto sig = key.sign(msg);
  for (auto _ : state) benchmark::DoNotOptimize(vnode::verify_signature(sig, msg, key.public_key()));
}
BENCHMARK(BM_Verify);

void BM_LedgerSubmit(benchmark::State& state) {
  const auto dir = std::filesystem::temp_directory_path() / ("vnode-bench-" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  {
    auto ledger = vnode::Ledger::open(dir / "chain.vdl");
    auto key = vnode::KeyPair::generate();
    vnode::Bytes payload(200, 0x11);
    for (auto _ : state) benchmark::DoNotOptimize(ledger->submit(vnode::TxKind::post, payload, key));
  }
  std::filesystem::remove_all(dir);
}
BENCHMARK(BM_LedgerSubmit)->Unit(benchmark::kMicrosecond);

void BM_ParseWav(benchmark::State& state) {
  const auto bytes = vnode::write_wav(vnode::make_voice_clip("benchmark clip", static_cast<std::uint64_t>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(vnode::parse_wav(bytes));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * bytes.size()));
}
BENCHMARK(BM_ParseWav)->Arg(1000)->Arg(5000)->Unit(benchmark::kMicrosecond);

void BM_MockS2st(benchmark::State& state) {
  vnode::MockEngine engine;
  const auto clip = vnode::make_voice_clip("need clean water", 5000);
  const auto eng = vnode::resolve_language("eng");
  const auto fra = vnode::resolve_language("fra");
  for (auto _ : state) benchmark::DoNotOptimize(engine.s2st(clip, eng, fra));
}
BENCHMARK(BM_MockS2st)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
