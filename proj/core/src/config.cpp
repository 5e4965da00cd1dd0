#include "vnode/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "vnode/error.hpp"

namespace vnode {
namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    fail(Errc::config_error, "config key '" + key + "' expects a number, got '" + value + "'");
  }
  return out;
}

bool looks_remote(const std::string& value) { return value.find("://") != std::string::npos; }

}  // namespace

std::string_view mode_name(NodeMode mode) { return mode == NodeMode::emergency ? "emergency" : "normal"; }

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "bind_addr",      "data_dir",      "mode",          "engine",          "engine_args",
      "engine_timeout_ms", "gas_price_wei", "session_ttl_s", "max_wav_bytes", "max_wav_seconds",
      "block_policy",   "static_dir",    "kdf_ops_limit", "kdf_mem_kib"};
  return keys;
}

std::map<std::string, std::string> parse_config_text(std::string_view text) {
  std::map<std::string, std::string> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    // '#' opens a comment at line start or after whitespace.
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '#' && (i == 0 || std::isspace(static_cast<unsigned char>(line[i - 1])))) {
        line.resize(i);
        break;
      }
    }
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) fail(Errc::config_error, "config line " + std::to_string(lineno) + " lacks '='");
    out[trim(std::string_view(t).substr(0, eq))] = trim(std::string_view(t).substr(eq + 1));
  }
  return out;
}

NodeConfig apply_config(NodeConfig c, const std::map<std::string, std::string>& values) {
  const auto& known = config_keys();
  for (const auto& [key, value] : values) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      fail(Errc::config_error, "unknown config key '" + key + "'");
    }
    if (key == "bind_addr") {
      const auto colon = value.rfind(':');
      if (colon == std::string::npos) fail(Errc::config_error, "bind_addr must be host:port");
      c.bind_host = value.substr(0, colon);
      c.bind_port = parse_number<std::uint16_t>(key, value.substr(colon + 1));
    } else if (key == "data_dir") {
      c.data_dir = value;
    } else if (key == "mode") {
      if (value == "normal") c.mode = NodeMode::normal;
      else if (value == "emergency") c.mode = NodeMode::emergency;
      else fail(Errc::config_error, "mode must be normal or emergency");
    } else if (key == "engine") {
      if (value == "mock") {
        c.engine.external = false;
        c.engine.executable.clear();
      } else if (value.rfind("external:", 0) == 0) {
        c.engine.external = true;
        c.engine.executable = value.substr(9);
      } else {
        fail(Errc::config_error, "engine must be 'mock' or 'external:<path>'");
      }
    } else if (key == "engine_args") {
      c.engine.args.clear();
      std::istringstream words(value);
      for (std::string w; words >> w;) c.engine.args.push_back(w);
    } else if (key == "engine_timeout_ms") {
      c.engine_timeout_ms = parse_number<std::uint64_t>(key, value);
    } else if (key == "gas_price_wei") {
      c.gas_price_wei = parse_number<std::uint64_t>(key, value);
    } else if (key == "session_ttl_s") {
      c.session_ttl_s = parse_number<std::int64_t>(key, value);
    } else if (key == "max_wav_bytes") {
      c.max_wav_bytes = parse_number<std::size_t>(key, value);
    } else if (key == "max_wav_seconds") {
      c.max_wav_seconds = parse_number<std::uint64_t>(key, value);
    } else if (key == "block_policy") {
      if (value == "immediate") c.block_batch_interval_ms = 0;
      else if (value.rfind("batch:", 0) == 0) c.block_batch_interval_ms = parse_number<std::uint64_t>(key, value.substr(6));
      else fail(Errc::config_error, "block_policy must be 'immediate' or 'batch:<interval_ms>'");
    } else if (key == "static_dir") {
      c.static_dir = value;
    } else if (key == "kdf_ops_limit") {
      c.kdf_ops_limit = parse_number<std::uint64_t>(key, value);
    } else if (key == "kdf_mem_kib") {
      c.kdf_mem_kib = parse_number<std::size_t>(key, value);
    }
  }
  return c;
}

std::map<std::string, std::string> config_from_environment() {
  std::map<std::string, std::string> out;
  for (const auto& key : config_keys()) {
    std::string var = "VNODE_";
    for (char ch : key) var.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
    if (const char* v = std::getenv(var.c_str())) out[key] = v;
  }
  return out;
}

NodeConfig load_config(const std::optional<std::filesystem::path>& file) {
  NodeConfig c;
  if (file) {
    std::ifstream in(*file);
    if (!in) fail(Errc::config_error, "cannot read config file " + file->string());
    std::stringstream buf;
    buf << in.rdbuf();
    c = apply_config(c, parse_config_text(buf.str()));
  }
  c = apply_config(c, config_from_environment());
  c.validate();
  return c;
}

void NodeConfig::validate() const {
  if (data_dir.empty()) fail(Errc::config_error, "data_dir must be set");
  if (gas_price_wei == 0 || session_ttl_s <= 0 || max_wav_bytes == 0 || max_wav_seconds == 0 ||
      engine_timeout_ms == 0 || kdf_ops_limit == 0 || kdf_mem_kib == 0) {
    fail(Errc::config_error, "all limits must be positive");
  }
  if (engine.external) {
    if (looks_remote(engine.executable.string())) {
      fail(Errc::config_error, "external engine must be a local executable path");
    }
    if (!std::filesystem::exists(engine.executable)) {
      fail(Errc::config_error, "engine executable does not exist: " + engine.executable.string());
    }
  }
  if (mode == NodeMode::emergency) {
    // No configured value may name a remote endpoint.
    const std::vector<std::string> values{data_dir.string(), engine.executable.string(), static_dir.string()};
    for (const auto& v : values) {
      if (looks_remote(v)) fail(Errc::config_error, "emergency mode refuses remote dependency '" + v + "'");
    }
    for (const auto& a : engine.args) {
      if (looks_remote(a)) fail(Errc::config_error, "emergency mode refuses remote engine argument '" + a + "'");
    }
  }
}

}  // namespace vnode
