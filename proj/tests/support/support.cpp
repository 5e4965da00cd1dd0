#include "support.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <httplib.h>

extern char** environ;

namespace testing_support {

TempDir::TempDir() {
  std::string tmpl = (std::filesystem::temp_directory_path() / "vnode-test-XXXXXX").string();
  if (!::mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
  path_ = tmpl;
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

vnode::Bytes voice_wav(const std::string& text, std::uint64_t ms) {
  return vnode::write_wav(vnode::make_voice_clip(text, ms));
}

vnode::WavAudio random_wav_audio(std::mt19937_64& rng) {
  auto pick = [&](std::uint64_t lo, std::uint64_t hi) { return std::uniform_int_distribution<std::uint64_t>(lo, hi)(rng); };
  vnode::WavAudio a;
  a.channels = static_cast<std::uint16_t>(pick(1, 2));
  a.sample_rate = static_cast<std::uint32_t>(pick(vnode::kMinSampleRate, vnode::kMaxSampleRate));
  const auto frames = pick(0, a.sample_rate / 5);
  a.samples.resize(frames * a.channels);
  for (auto& s : a.samples) s = static_cast<std::int16_t>(pick(0, 65535) - 32768);
  const auto extras = pick(0, 3);
  for (std::uint64_t i = 0; i < extras; ++i) {
    vnode::RiffChunk c;
    if (pick(0, 3) == 0) {
      c.id = vnode::kTranscriptChunk;
    } else {
      do {
        for (auto& b : c.id) b = static_cast<char>(pick(0x20, 0x7e));
      } while (c.id == vnode::chunk_id("fmt ") || c.id == vnode::chunk_id("data"));
    }
    c.data.resize(pick(0, 64));
    for (auto& b : c.data) b = static_cast<std::uint8_t>(pick(0, 255));
    a.extra_chunks.push_back(std::move(c));
  }
  return a;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream(p, std::ios::binary | std::ios::trunc) << bytes;
}

std::string vnode_binary() { return VNODE_BINARY; }
std::string engine_mock_binary() { return VNODE_ENGINE_MOCK_BINARY; }
std::string netmon_library() { return VNODE_NETMON_LIBRARY; }

namespace {

std::vector<std::string> make_env(const std::map<std::string, std::string>& extra) {
  std::map<std::string, std::string> env;
  for (char** e = environ; *e; ++e) {
    std::string kv(*e);
    auto eq = kv.find('=');
    if (eq == std::string::npos) continue;
    // Tests decide the configuration; inherited overrides would leak in.
    if (kv.rfind("VNODE_", 0) == 0) continue;
    env[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  for (const auto& [k, v] : extra) env[k] = v;
  std::vector<std::string> out;
  for (const auto& [k, v] : env) out.push_back(k + "=" + v);
  return out;
}

std::vector<char*> c_strings(std::vector<std::string>& v) {
  std::vector<char*> out;
  for (auto& s : v) out.push_back(s.data());
  out.push_back(nullptr);
  return out;
}

pid_t spawn(std::vector<std::string> argv, const std::map<std::string, std::string>& env, int out_fd, int err_fd) {
  auto envs = make_env(env);
  auto c_argv = c_strings(argv);
  auto c_env = c_strings(envs);
  posix_spawn_file_actions_t fa;
  posix_spawn_file_actions_init(&fa);
  posix_spawn_file_actions_addopen(&fa, STDIN_FILENO, "/dev/null", O_RDONLY, 0);
  if (out_fd >= 0) posix_spawn_file_actions_adddup2(&fa, out_fd, STDOUT_FILENO);
  if (err_fd >= 0) posix_spawn_file_actions_adddup2(&fa, err_fd, STDERR_FILENO);
  pid_t pid = -1;
  int rc = posix_spawn(&pid, c_argv[0], &fa, nullptr, c_argv.data(), c_env.data());
  posix_spawn_file_actions_destroy(&fa);
  if (rc != 0) throw std::runtime_error("posix_spawn " + argv[0] + " failed");
  return pid;
}

int wait_exit(pid_t pid) {
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0) {
    if (errno != EINTR) return -1;
  }
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  return 128 + WTERMSIG(status);
}

}  // namespace

ProcessResult run_process(const std::vector<std::string>& argv, const std::map<std::string, std::string>& env) {
  TempDir tmp;
  const auto out_path = tmp / "out";
  const auto err_path = tmp / "err";
  int out_fd = ::open(out_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  int err_fd = ::open(err_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  pid_t pid = spawn(argv, env, out_fd, err_fd);
  ::close(out_fd);
  ::close(err_fd);
  ProcessResult r;
  r.exit_code = wait_exit(pid);
  r.out = read_file(out_path);
  r.err = read_file(err_path);
  return r;
}

ServeProcess::ServeProcess(const std::filesystem::path& data_dir, std::map<std::string, std::string> env,
                           const std::string& config_file) {
  std::vector<std::string> argv{vnode_binary()};
  if (!config_file.empty()) argv.insert(argv.end(), {"--config", config_file});
  argv.insert(argv.end(), {"serve", "--data-dir", data_dir.string(), "--bind", "127.0.0.1:0"});
  env.emplace("VNODE_KDF_MEM_KIB", "8192");
  env.emplace("VNODE_KDF_OPS_LIMIT", "1");

  int pipefd[2];
  if (::pipe2(pipefd, O_CLOEXEC) != 0) throw std::runtime_error("pipe failed");
  stderr_log_ = data_dir.parent_path() / (data_dir.filename().string() + ".serve.log");
  int err_fd = ::open(stderr_log_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  pid_ = spawn(argv, env, pipefd[1], err_fd);
  ::close(pipefd[1]);
  ::close(err_fd);

  std::string line;
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(30);
  char ch;
  while (line.find('\n') == std::string::npos) {
    pollfd p{pipefd[0], POLLIN, 0};
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0 || ::poll(&p, 1, static_cast<int>(left.count())) <= 0) break;
    if (::read(pipefd[0], &ch, 1) != 1) break;
    line.push_back(ch);
  }
  ::close(pipefd[0]);
  auto j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.contains("listening")) {
    int code = stop();
    throw std::runtime_error("vnode serve did not start (exit " + std::to_string(code) +
                             "): " + read_file(stderr_log_));
  }
  const auto listening = j["listening"].get<std::string>();
  port_ = std::stoi(listening.substr(listening.rfind(':') + 1));
}

ServeProcess::~ServeProcess() { stop(); }

int ServeProcess::stop() {
  if (pid_ <= 0) return -1;
  ::kill(pid_, SIGTERM);
  int code = wait_exit(pid_);
  pid_ = -1;
  return code;
}

json HttpReply::j() const { return json::parse(body); }

struct Http::Impl {
  httplib::Client client;
  explicit Impl(const std::string& url) : client(url) {
    client.set_read_timeout(std::chrono::seconds(60));
    client.set_write_timeout(std::chrono::seconds(60));
  }
};

namespace {

httplib::Headers auth(const std::string& token) {
  if (token.empty()) return {};
  return {{"Authorization", "Bearer " + token}};
}

HttpReply convert(const httplib::Result& r) {
  if (!r) throw std::runtime_error("HTTP request failed: " + httplib::to_string(r.error()));
  HttpReply out;
  out.status = r->status;
  out.body = r->body;
  for (const auto& [k, v] : r->headers) out.headers[k] = v;
  return out;
}

}  // namespace

Http::Http(std::string base_url) : impl_(std::make_unique<Impl>(base_url)) {}
Http::~Http() = default;

HttpReply Http::get(const std::string& path, const std::string& token) {
  return convert(impl_->client.Get(path, auth(token)));
}
HttpReply Http::del(const std::string& path, const std::string& token) {
  return convert(impl_->client.Delete(path, auth(token)));
}
HttpReply Http::post_json(const std::string& path, const json& body, const std::string& token) {
  return convert(impl_->client.Post(path, auth(token), body.dump(), "application/json"));
}
HttpReply Http::put_json(const std::string& path, const json& body, const std::string& token) {
  return convert(impl_->client.Put(path, auth(token), body.dump(), "application/json"));
}
HttpReply Http::put_raw(const std::string& path, const std::string& body, const std::string& content_type,
                        const std::string& token) {
  return convert(impl_->client.Put(path, auth(token), body, content_type));
}
HttpReply Http::post_raw(const std::string& path, const std::string& body, const std::string& content_type,
                         const std::string& token) {
  return convert(impl_->client.Post(path, auth(token), body, content_type));
}
HttpReply Http::post_audio(const std::string& token, const vnode::Bytes& wav, const std::string& lang) {
  httplib::MultipartFormDataItems items{{"audio", vnode::to_string(wav), "post.wav", "audio/wav"}};
  if (!lang.empty()) items.push_back({"lang", lang, "", ""});
  return convert(impl_->client.Post("/api/v1/posts", auth(token), items));
}

vnode::NodeConfig test_config(const std::filesystem::path& data_dir) {
  vnode::NodeConfig c;
  c.data_dir = data_dir;
  c.bind_host = "127.0.0.1";
  c.bind_port = 0;
  c.kdf_ops_limit = 1;
  c.kdf_mem_kib = 8192;
  return c;
}

InProcessServer::InProcessServer(const vnode::NodeConfig& config) {
  node_ = vnode::Node::open(config);
  api_ = std::make_unique<vnode::ApiServer>(*node_);
  port_ = api_->bind("127.0.0.1", 0);
  thread_ = std::thread([this] { api_->run(); });
  // Wait until the listener accepts.
  httplib::Client probe(base_url());
  for (int i = 0; i < 200 && !probe.Get("/api/v1/health"); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(5));
}

InProcessServer::~InProcessServer() {
  api_->stop();
  if (thread_.joinable()) thread_.join();
}

std::string enroll(Http& http, const std::string& username, const std::string& lang, const std::string& password) {
  auto r = http.post_json("/api/v1/register", {{"username", username}, {"password", password}, {"default_lang", lang}});
  if (r.status != 201) throw std::runtime_error("register " + username + ": " + r.body);
  auto l = http.post_json("/api/v1/login", {{"username", username}, {"password", password}});
  if (l.status != 200) throw std::runtime_error("login " + username + ": " + l.body);
  return l.j()["token"].get<std::string>();
}

}  // namespace testing_support
