#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace vnode {

enum class NodeMode { normal, emergency };

struct EngineSpec {
  bool external = false;
  std::filesystem::path executable;
  std::vector<std::string> args;
};

/// Node settings. The config file is flat UTF-8 "key = value" lines ('#'
/// starts a comment); every key can be overridden by VNODE_<KEY>.
struct NodeConfig {
  std::string bind_host = "0.0.0.0";
  std::uint16_t bind_port = 8080;
  std::filesystem::path data_dir = "vnode-data";
  NodeMode mode = NodeMode::normal;
  EngineSpec engine;
  std::uint64_t engine_timeout_ms = 60'000;
  std::uint64_t gas_price_wei = 115'000'000;
  std::int64_t session_ttl_s = 24 * 3600;
  std::size_t max_wav_bytes = 10u << 20;
  std::uint64_t max_wav_seconds = 120;
  std::uint64_t block_batch_interval_ms = 0;  // 0 = immediate sealing
  std::filesystem::path static_dir;
  std::uint64_t kdf_ops_limit = 2;
  std::size_t kdf_mem_kib = 64 * 1024;

  /// Throws config_error. Emergency mode also refuses anything that would
  /// reach off the machine.
  void validate() const;
};

std::string_view mode_name(NodeMode mode);

/// Known keys, in documentation order.
const std::vector<std::string>& config_keys();

/// Parses "key = value" text; throws config_error on malformed lines.
std::map<std::string, std::string> parse_config_text(std::string_view text);

/// Applies key/value pairs on top of `base`; throws config_error for unknown
/// keys or bad values.
NodeConfig apply_config(NodeConfig base, const std::map<std::string, std::string>& values);

/// Reads VNODE_<KEY> variables for every known key.
std::map<std::string, std::string> config_from_environment();

/// Defaults, then the file (when given), then the environment.
NodeConfig load_config(const std::optional<std::filesystem::path>& file);

}  // namespace vnode
