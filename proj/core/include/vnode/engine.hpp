#pragma once

#include <sys/types.h>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "vnode/lang.hpp"
#include "vnode/media.hpp"

namespace vnode {

enum class Capability { asr, t2tt, s2st };

std::string_view capability_name(Capability c);
std::optional<Capability> parse_capability(std::string_view name);

struct EngineDescriptor {
  std::string engine_id;
  std::set<Capability> capabilities;
  std::vector<LanguageCode> languages;

  bool supports(LanguageCode lang) const;
  bool has(Capability c) const { return capabilities.contains(c); }
};

struct TranscriptionResult {
  std::string text;
  LanguageCode lang;
  double confidence = 0.0;
  std::uint64_t audio_duration_ms = 0;
};

/// Speech engine covering recognition, text translation and speech
/// synthesis. Implementations must accept concurrent calls.
class SpeechEngine {
 public:
  virtual ~SpeechEngine() = default;

  virtual const EngineDescriptor& descriptor() const = 0;
  virtual TranscriptionResult asr(const WavAudio& audio, LanguageCode lang) = 0;
  virtual std::string t2tt(std::string_view text, LanguageCode src, LanguageCode dst) = 0;
  virtual WavAudio s2st(const WavAudio& audio, LanguageCode src, LanguageCode dst) = 0;
};

/// Deterministic stand-in for ML inference. The ground-truth transcript
/// travels inside the WAV as a "txts" chunk:
///   asr   returns the chunk text with confidence 1.0
///   t2tt  returns text unchanged for src == dst, else "[dst] " + text
///   s2st  synthesizes a tone for t2tt(asr(audio)) carrying that text
class MockEngine final : public SpeechEngine {
 public:
  explicit MockEngine(std::string engine_id = "mock-1");

  const EngineDescriptor& descriptor() const override { return descriptor_; }
  TranscriptionResult asr(const WavAudio& audio, LanguageCode lang) override;
  std::string t2tt(std::string_view text, LanguageCode src, LanguageCode dst) override;
  WavAudio s2st(const WavAudio& audio, LanguageCode src, LanguageCode dst) override;

 private:
  EngineDescriptor descriptor_;
};

/// Length-prefixed framing used on the engine's standard streams:
/// len(u32 BE) | UTF-8 JSON document.
namespace wire {

constexpr std::uint32_t kMaxMessageBytes = 64u << 20;

/// Throws engine_unavailable on a broken pipe or when a non-blocking `fd`
/// stays full past the deadline.
void write_message(int fd, std::string_view body,
                   std::chrono::steady_clock::time_point deadline = std::chrono::steady_clock::time_point::max());
/// nullopt on EOF; throws engine_unavailable on timeout or malformed frames.
std::optional<std::string> read_message(int fd, std::chrono::steady_clock::time_point deadline);

}  // namespace wire

struct ExternalEngineOptions {
  std::filesystem::path executable;
  std::vector<std::string> args;
  std::chrono::milliseconds timeout{60'000};
};

/// Adapter for an engine process speaking the wire protocol. Requests are
/// serialized; a dead or unresponsive process is killed and relaunched on the
/// next call.
class ExternalEngine final : public SpeechEngine {
 public:
  /// Spawns the process and reads its handshake. Throws engine_unavailable.
  static std::unique_ptr<ExternalEngine> launch(ExternalEngineOptions options);
  ~ExternalEngine() override;

  const EngineDescriptor& descriptor() const override { return descriptor_; }
  TranscriptionResult asr(const WavAudio& audio, LanguageCode lang) override;
  std::string t2tt(std::string_view text, LanguageCode src, LanguageCode dst) override;
  WavAudio s2st(const WavAudio& audio, LanguageCode src, LanguageCode dst) override;

  pid_t pid() const;

 private:
  explicit ExternalEngine(ExternalEngineOptions options);
  void spawn_locked();
  void kill_locked();
  // Sends one request document (an "id" is added) and returns the matching
  // successful response document; maps failures onto Error codes.
  std::string transact(Capability op, LanguageCode src, LanguageCode dst, std::string request);

  ExternalEngineOptions options_;
  EngineDescriptor descriptor_;
  mutable std::mutex mu_;
  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::uint64_t next_id_ = 1;
};

}  // namespace vnode
