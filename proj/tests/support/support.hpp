#pragma once

#include <sys/types.h>

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "vnode/bytes.hpp"
#include "vnode/api.hpp"
#include "vnode/media.hpp"
#include "vnode/node.hpp"

namespace testing_support {

using nlohmann::json;

/// mkdtemp directory removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& leaf) const { return path_ / leaf; }

 private:
  std::filesystem::path path_;
};

/// WAV bytes carrying `text` in a txts chunk.
vnode::Bytes voice_wav(const std::string& text, std::uint64_t ms = 500);

/// Random valid audio: 1-2 channels, 8-48 kHz, up to ~0.2 s, zero to three
/// extra chunks (odd sizes included, sometimes a txts chunk).
vnode::WavAudio random_wav_audio(std::mt19937_64& rng);

std::string read_file(const std::filesystem::path& p);
void write_file(const std::filesystem::path& p, const std::string& bytes);

/// Build-tree locations, injected by CMake.
std::string vnode_binary();
std::string engine_mock_binary();
std::string netmon_library();

struct ProcessResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

/// Runs a program to completion with extra environment variables.
ProcessResult run_process(const std::vector<std::string>& argv, const std::map<std::string, std::string>& env = {});

/// A `vnode serve` child process. The constructor waits for its
/// {"listening": ...} line.
class ServeProcess {
 public:
  ServeProcess(const std::filesystem::path& data_dir, std::map<std::string, std::string> env = {},
               const std::string& config_file = {});
  ~ServeProcess();
  ServeProcess(const ServeProcess&) = delete;
  ServeProcess& operator=(const ServeProcess&) = delete;

  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  int port() const { return port_; }
  pid_t pid() const { return pid_; }
  /// SIGTERM and wait; returns the exit status.
  int stop();

 private:
  pid_t pid_ = -1;
  int port_ = 0;
  std::filesystem::path stderr_log_;
};

struct HttpReply {
  int status = 0;
  std::string body;
  std::map<std::string, std::string> headers;
  json j() const;
};

/// Minimal blocking HTTP client for tests.
class Http {
 public:
  explicit Http(std::string base_url);
  ~Http();
  HttpReply get(const std::string& path, const std::string& token = {});
  HttpReply del(const std::string& path, const std::string& token = {});
  HttpReply post_json(const std::string& path, const json& body, const std::string& token = {});
  HttpReply put_json(const std::string& path, const json& body, const std::string& token = {});
  HttpReply put_raw(const std::string& path, const std::string& body, const std::string& content_type,
                    const std::string& token = {});
  HttpReply post_raw(const std::string& path, const std::string& body, const std::string& content_type,
                     const std::string& token = {});
  HttpReply post_audio(const std::string& token, const vnode::Bytes& wav, const std::string& lang = {});

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Node settings for tests: mock engine, cheap password hashing.
vnode::NodeConfig test_config(const std::filesystem::path& data_dir);

/// A node plus its HTTP service on an ephemeral loopback port, in-process.
class InProcessServer {
 public:
  explicit InProcessServer(const vnode::NodeConfig& config);
  ~InProcessServer();
  vnode::Node& node() { return *node_; }
  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  std::unique_ptr<vnode::Node> node_;
  std::unique_ptr<vnode::ApiServer> api_;
  std::thread thread_;
  int port_ = 0;
};

/// register + login; returns the bearer token.
std::string enroll(Http& http, const std::string& username, const std::string& lang,
                   const std::string& password = "correct horse");

}  // namespace testing_support
