#pragma once

#include <memory>

#include "vnode/config.hpp"
#include "vnode/engine.hpp"
#include "vnode/identity.hpp"
#include "vnode/metrics.hpp"
#include "vnode/posts.hpp"
#include "vnode/storage.hpp"

namespace vnode {

struct NodeHooks {
  Clock clock;
  std::function<void(std::string_view)> fault_hook;
};

/// A fully wired node: store, ledger, engine, identity, posts and metrics.
/// Opening runs crash recovery before returning.
class Node {
 public:
  static std::unique_ptr<Node> open(const NodeConfig& config, NodeHooks hooks = {});

  const NodeConfig& config() const { return config_; }
  Store& store() { return *store_; }
  Ledger& ledger() { return store_->ledger(); }
  SpeechEngine& engine() { return *engine_; }
  IdentityService& identity() { return *identity_; }
  PostService& posts() { return *posts_; }
  Metrics& metrics() { return *metrics_; }

 private:
  Node() = default;

  NodeConfig config_;
  std::unique_ptr<Metrics> metrics_;
  std::unique_ptr<Store> store_;
  std::unique_ptr<SpeechEngine> engine_;
  std::unique_ptr<IdentityService> identity_;
  std::unique_ptr<PostService> posts_;
};

std::unique_ptr<SpeechEngine> make_engine(const NodeConfig& config);

}  // namespace vnode
