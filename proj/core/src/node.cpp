#include "vnode/node.hpp"

namespace vnode {

std::unique_ptr<SpeechEngine> make_engine(const NodeConfig& config) {
  if (!config.engine.external) return std::make_unique<MockEngine>();
  return ExternalEngine::launch(
      {config.engine.executable, config.engine.args, std::chrono::milliseconds(config.engine_timeout_ms)});
}

std::unique_ptr<Node> Node::open(const NodeConfig& config, NodeHooks hooks) {
  config.validate();
  auto node = std::unique_ptr<Node>(new Node());
  node->config_ = config;
  node->metrics_ = std::make_unique<Metrics>();

  StoreOptions store_options;
  store_options.max_blob_bytes = config.max_wav_bytes;
  store_options.ledger.gas.gas_price_wei = config.gas_price_wei;
  store_options.ledger.policy.batch_interval_ms = config.block_batch_interval_ms;
  if (hooks.clock) store_options.ledger.clock = [c = hooks.clock] { return static_cast<std::uint64_t>(c()); };
  Metrics* metrics = node->metrics_.get();
  store_options.ledger.on_commit = [metrics](TxKind kind, double ms, Wei cost) {
    metrics->record_stage(Stage::ledger_commit, ms);
    metrics->record_cost(kind, cost);
  };
  node->store_ = Store::open(config.data_dir, std::move(store_options));
  node->engine_ = make_engine(config);

  IdentityOptions id_options;
  id_options.kdf = {config.kdf_ops_limit, config.kdf_mem_kib * 1024};
  id_options.session_ttl_ms = config.session_ttl_s * 1000;
  id_options.clock = hooks.clock;
  node->identity_ = std::make_unique<IdentityService>(*node->store_, id_options);

  PostOptions post_options;
  post_options.wav_limits = {config.max_wav_bytes, config.max_wav_seconds * 1000};
  post_options.clock = hooks.clock;
  post_options.fault_hook = hooks.fault_hook;
  node->posts_ = std::make_unique<PostService>(*node->store_, *node->identity_, *node->engine_, metrics, post_options);

  node->identity_->sweep_sessions();
  node->identity_->recover();
  node->posts_->recover();
  return node;
}

}  // namespace vnode
