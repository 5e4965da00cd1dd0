#include "vnode/engine.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "json.hpp"
#include "vnode/crypto.hpp"
#include "vnode/error.hpp"

extern char** environ;

namespace vnode {

using json = nlohmann::json;

std::string_view capability_name(Capability c) {
  switch (c) {
    case Capability::asr: return "asr";
    case Capability::t2tt: return "t2tt";
    case Capability::s2st: return "s2st";
  }
  return "unknown";
}

std::optional<Capability> parse_capability(std::string_view name) {
  if (name == "asr") return Capability::asr;
  if (name == "t2tt") return Capability::t2tt;
  if (name == "s2st") return Capability::s2st;
  return std::nullopt;
}

bool EngineDescriptor::supports(LanguageCode lang) const {
  return std::find(languages.begin(), languages.end(), lang) != languages.end();
}

// ---------------------------------------------------------------------------
// Mock

MockEngine::MockEngine(std::string engine_id) {
  descriptor_.engine_id = std::move(engine_id);
  descriptor_.capabilities = {Capability::asr, Capability::t2tt, Capability::s2st};
  auto all = supported_languages();
  descriptor_.languages.assign(all.begin(), all.end());
}

TranscriptionResult MockEngine::asr(const WavAudio& audio, LanguageCode lang) {
  auto text = audio.transcript();
  if (!text) fail(Errc::no_transcript_chunk, "audio carries no txts chunk");
  return {std::move(*text), lang, 1.0, audio.duration_ms()};
}

std::string MockEngine::t2tt(std::string_view text, LanguageCode src, LanguageCode dst) {
  if (src == dst) return std::string(text);
  return "[" + std::string(dst.code()) + "] " + std::string(text);
}

WavAudio MockEngine::s2st(const WavAudio& audio, LanguageCode src, LanguageCode dst) {
  return synth_tone(t2tt(asr(audio, src).text, src, dst));
}

// ---------------------------------------------------------------------------
// Wire framing

namespace wire {

void write_message(int fd, std::string_view body, std::chrono::steady_clock::time_point deadline) {
  Bytes frame;
  frame.reserve(body.size() + 4);
  BeWriter w(frame);
  w.u32(static_cast<std::uint32_t>(body.size()));
  w.raw(body);
  std::size_t off = 0;
  while (off < frame.size()) {
    ssize_t n = ::write(fd, frame.data() + off, frame.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      if (errno == EAGAIN) {
        // Non-blocking pipe is full; wait for the engine to drain it.
        const auto left =
            std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) fail(Errc::engine_unavailable, "engine timed out reading its input");
        pollfd pfd{fd, POLLOUT, 0};
        ::poll(&pfd, 1, static_cast<int>(std::min<std::int64_t>(left.count(), 1'000'000)));
        continue;
      }
      fail(Errc::engine_unavailable, std::string("engine pipe write failed: ") + std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
}

namespace {

// Returns false on clean EOF before any byte was read.
bool read_exact(int fd, std::uint8_t* out, std::size_t n, std::chrono::steady_clock::time_point deadline) {
  std::size_t got = 0;
  while (got < n) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) fail(Errc::engine_unavailable, "engine timed out");
    pollfd pfd{fd, POLLIN, 0};
    const int rc = ::poll(&pfd, 1, static_cast<int>(std::min<std::int64_t>(left.count(), 1'000'000)));
    if (rc < 0) {
      if (errno == EINTR) continue;
      fail(Errc::engine_unavailable, "poll failed on engine pipe");
    }
    if (rc == 0) continue;
    ssize_t r = ::read(fd, out + got, n - got);
    if (r < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      fail(Errc::engine_unavailable, "engine pipe read failed");
    }
    if (r == 0) {
      if (got == 0) return false;
      fail(Errc::engine_unavailable, "engine closed its output mid-message");
    }
    got += static_cast<std::size_t>(r);
  }
  return true;
}

}  // namespace

std::optional<std::string> read_message(int fd, std::chrono::steady_clock::time_point deadline) {
  std::uint8_t len_bytes[4];
  if (!read_exact(fd, len_bytes, 4, deadline)) return std::nullopt;
  const std::uint32_t len = (std::uint32_t{len_bytes[0]} << 24) | (std::uint32_t{len_bytes[1]} << 16) |
                            (std::uint32_t{len_bytes[2]} << 8) | std::uint32_t{len_bytes[3]};
  if (len > kMaxMessageBytes) fail(Errc::engine_unavailable, "engine message too large");
  std::string body(len, '\0');
  if (len > 0 && !read_exact(fd, reinterpret_cast<std::uint8_t*>(body.data()), len, deadline)) {
    fail(Errc::engine_unavailable, "engine closed its output mid-message");
  }
  return body;
}

}  // namespace wire

// ---------------------------------------------------------------------------
// External process

ExternalEngine::ExternalEngine(ExternalEngineOptions options) : options_(std::move(options)) {}

std::unique_ptr<ExternalEngine> ExternalEngine::launch(ExternalEngineOptions options) {
  ::signal(SIGPIPE, SIG_IGN);
  auto engine = std::unique_ptr<ExternalEngine>(new ExternalEngine(std::move(options)));
  std::lock_guard lk(engine->mu_);
  engine->spawn_locked();
  return engine;
}

ExternalEngine::~ExternalEngine() {
  std::lock_guard lk(mu_);
  kill_locked();
}

pid_t ExternalEngine::pid() const {
  std::lock_guard lk(mu_);
  return pid_;
}

void ExternalEngine::spawn_locked() {
  if (!std::filesystem::exists(options_.executable)) {
    fail(Errc::engine_unavailable, "engine executable not found: " + options_.executable.string());
  }
  int in_pipe[2];
  int out_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) != 0) fail(Errc::engine_unavailable, "pipe failed");
  if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    fail(Errc::engine_unavailable, "pipe failed");
  }

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);

  std::vector<std::string> argv_store{options_.executable.string()};
  argv_store.insert(argv_store.end(), options_.args.begin(), options_.args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  argv.push_back(nullptr);

  pid_t pid = -1;
  const int rc = ::posix_spawn(&pid, argv[0], &actions, nullptr, argv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  if (rc != 0) {
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    fail(Errc::engine_unavailable, std::string("cannot start engine: ") + std::strerror(rc));
  }
  pid_ = pid;
  ::fcntl(in_pipe[1], F_SETFL, ::fcntl(in_pipe[1], F_GETFL) | O_NONBLOCK);
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];

  try {
    auto hello = wire::read_message(from_child_, std::chrono::steady_clock::now() + options_.timeout);
    if (!hello) fail(Errc::engine_unavailable, "engine exited before its handshake");
    const json h = json::parse(*hello);
    EngineDescriptor d;
    d.engine_id = h.at("engine_id").get<std::string>();
    if (d.engine_id.empty()) fail(Errc::engine_unavailable, "engine handshake has an empty engine_id");
    for (const auto& c : h.at("capabilities")) {
      if (auto cap = parse_capability(c.get<std::string>())) d.capabilities.insert(*cap);
    }
    for (const auto& l : h.at("languages")) {
      // Languages outside the registry are dropped.
      if (auto code = LanguageRegistry::find(l.get<std::string>())) d.languages.push_back(*code);
    }
    descriptor_ = std::move(d);
  } catch (const json::exception& e) {
    kill_locked();
    fail(Errc::engine_unavailable, std::string("malformed engine handshake: ") + e.what());
  } catch (...) {
    kill_locked();
    throw;
  }
}

void ExternalEngine::kill_locked() {
  if (to_child_ >= 0) ::close(to_child_);
  if (from_child_ >= 0) ::close(from_child_);
  to_child_ = from_child_ = -1;
  if (pid_ > 0) {
    ::kill(pid_, SIGKILL);
    int status = 0;
    while (::waitpid(pid_, &status, 0) < 0 && errno == EINTR) {
    }
  }
  pid_ = -1;
}

std::string ExternalEngine::transact(Capability op, LanguageCode src, LanguageCode dst, std::string request) {
  std::lock_guard lk(mu_);
  if (pid_ <= 0) spawn_locked();
  if (!descriptor_.has(op)) {
    fail(Errc::engine_unavailable, "engine '" + descriptor_.engine_id + "' lacks " + std::string(capability_name(op)));
  }
  if (!descriptor_.supports(src) || !descriptor_.supports(dst)) {
    fail(Errc::unsupported_language, "engine does not support " + std::string(src.code()) + "->" +
                                         std::string(dst.code()));
  }

  json req = json::parse(request);
  const std::uint64_t id = next_id_++;
  req["id"] = std::to_string(id);
  req["op"] = capability_name(op);
  req["src"] = src.code();
  req["dst"] = dst.code();

  json reply;
  try {
    const auto deadline = std::chrono::steady_clock::now() + options_.timeout;
    wire::write_message(to_child_, req.dump(), deadline);
    auto msg = wire::read_message(from_child_, deadline);
    if (!msg) fail(Errc::engine_unavailable, "engine exited");
    reply = json::parse(*msg);
    if (reply.value("id", std::string()) != std::to_string(id)) {
      fail(Errc::engine_unavailable, "engine answered out of order");
    }
  } catch (const json::exception& e) {
    kill_locked();
    fail(Errc::engine_unavailable, std::string("malformed engine response: ") + e.what());
  } catch (const Error&) {
    kill_locked();
    throw;
  }

  if (!reply.value("ok", false)) {
    const std::string err = reply.value("error", std::string("engine error"));
    if (err == "unsupported_language") fail(Errc::unsupported_language, err);
    if (err == "no_transcript_chunk") fail(Errc::no_transcript_chunk, err);
    fail(Errc::engine_unavailable, "engine error: " + err);
  }
  return reply.dump();
}

TranscriptionResult ExternalEngine::asr(const WavAudio& audio, LanguageCode lang) {
  json req{{"audio_b64", base64_encode(write_wav(audio))}};
  const json reply = json::parse(transact(Capability::asr, lang, lang, req.dump()));
  TranscriptionResult out;
  out.text = reply.value("text", std::string());
  out.lang = lang;
  out.confidence = std::clamp(reply.value("confidence", 0.0), 0.0, 1.0);
  out.audio_duration_ms = audio.duration_ms();
  return out;
}

std::string ExternalEngine::t2tt(std::string_view text, LanguageCode src, LanguageCode dst) {
  json req{{"text", text}};
  const json reply = json::parse(transact(Capability::t2tt, src, dst, req.dump()));
  return reply.value("text", std::string());
}

WavAudio ExternalEngine::s2st(const WavAudio& audio, LanguageCode src, LanguageCode dst) {
  json req{{"audio_b64", base64_encode(write_wav(audio))}};
  const json reply = json::parse(transact(Capability::s2st, src, dst, req.dump()));
  auto bytes = base64_decode(reply.value("audio_b64", std::string()));
  if (!bytes) fail(Errc::engine_unavailable, "engine returned invalid base64 audio");
  try {
    return parse_wav(*bytes);
  } catch (const Error& e) {
    fail(Errc::engine_unavailable, std::string("engine returned unusable audio: ") + e.what());
  }
}

}  // namespace vnode
