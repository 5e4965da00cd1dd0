#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vnode/bytes.hpp"

namespace vnode {

using ChunkId = std::array<char, 4>;

constexpr ChunkId kTranscriptChunk{'t', 'x', 't', 's'};

inline ChunkId chunk_id(std::string_view s) {
  ChunkId id{' ', ' ', ' ', ' '};
  for (std::size_t i = 0; i < 4 && i < s.size(); ++i) id[i] = s[i];
  return id;
}

struct RiffChunk {
  ChunkId id{};
  Bytes data;

  friend bool operator==(const RiffChunk&, const RiffChunk&) = default;
};

/// 16-bit PCM audio plus any non-core RIFF chunks, kept in file order.
struct WavAudio {
  std::uint32_t sample_rate = 16000;
  std::uint16_t channels = 1;
  std::uint16_t bits_per_sample = 16;
  std::vector<std::int16_t> samples;  // interleaved
  std::vector<RiffChunk> extra_chunks;

  std::size_t frame_count() const { return channels == 0 ? 0 : samples.size() / channels; }
  std::uint64_t duration_ms() const {
    return sample_rate == 0 ? 0 : static_cast<std::uint64_t>(frame_count()) * 1000 / sample_rate;
  }

  /// Body of the first "txts" chunk, if any.
  std::optional<std::string> transcript() const;
  /// Replaces (or appends) the "txts" chunk.
  void set_transcript(std::string_view text);

  friend bool operator==(const WavAudio&, const WavAudio&) = default;
};

struct WavLimits {
  std::size_t max_bytes = 10u << 20;
  std::uint64_t max_duration_ms = 120'000;
};

constexpr std::uint32_t kMinSampleRate = 8000;
constexpr std::uint32_t kMaxSampleRate = 48000;

/// Throws Error with not_riff, unsupported_encoding, too_long, too_large or
/// truncated_chunk.
WavAudio parse_wav(ByteView bytes, const WavLimits& limits = {});

/// Canonical layout: RIFF header, "fmt ", "data", then extra chunks in order,
/// each padded to even length. Throws invalid_argument if the value breaks the
/// WavAudio invariants.
Bytes write_wav(const WavAudio& audio);

struct ToneParams {
  std::uint32_t sample_rate = 16000;
  double amplitude = 0.3;
  std::uint64_t min_duration_ms = 250;
  std::uint64_t ms_per_word = 50;
  double base_hz = 220.0;
  double step_hz = 55.0;
};

std::size_t word_count(std::string_view text);
double tone_frequency(std::string_view text, const ToneParams& params = {});
std::uint64_t tone_duration_ms(std::string_view text, const ToneParams& params = {});

/// Deterministic sine tone whose pitch and length are functions of the text;
/// the text itself rides along in a "txts" chunk.
WavAudio synth_tone(std::string_view text, const ToneParams& params = {});

/// Test and bench input: a deterministic chirp of the given length carrying
/// `transcript` in its "txts" chunk.
WavAudio make_voice_clip(std::string_view transcript, std::uint64_t duration_ms, std::uint32_t sample_rate = 16000);

/// SHA-256 of the stored file bytes.
Hash32 audio_hash(ByteView bytes);

}  // namespace vnode
