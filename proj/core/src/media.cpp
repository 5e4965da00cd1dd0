#include "vnode/media.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vnode/crypto.hpp"
#include "vnode/error.hpp"

namespace vnode {
namespace {

class LeReader {
 public:
  explicit LeReader(ByteView data) : data_(data) {}

  std::uint16_t u16(std::size_t at) const { return static_cast<std::uint16_t>(data_[at] | (data_[at + 1] << 8)); }
  std::uint32_t u32(std::size_t at) const {
    return static_cast<std::uint32_t>(data_[at]) | (static_cast<std::uint32_t>(data_[at + 1]) << 8) |
           (static_cast<std::uint32_t>(data_[at + 2]) << 16) | (static_cast<std::uint32_t>(data_[at + 3]) << 24);
  }
  ChunkId id(std::size_t at) const {
    return {static_cast<char>(data_[at]), static_cast<char>(data_[at + 1]), static_cast<char>(data_[at + 2]),
            static_cast<char>(data_[at + 3])};
  }

 private:
  ByteView data_;
};

void put_u16(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(Bytes& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_id(Bytes& out, const ChunkId& id) { out.insert(out.end(), id.begin(), id.end()); }

constexpr ChunkId kFmt{'f', 'm', 't', ' '};
constexpr ChunkId kData{'d', 'a', 't', 'a'};

std::string id_string(const ChunkId& id) { return {id.begin(), id.end()}; }

}  // namespace

std::optional<std::string> WavAudio::transcript() const {
  for (const auto& c : extra_chunks) {
    if (c.id == kTranscriptChunk) return to_string(c.data);
  }
  return std::nullopt;
}

void WavAudio::set_transcript(std::string_view text) {
  Bytes body(text.begin(), text.end());
  for (auto& c : extra_chunks) {
    if (c.id == kTranscriptChunk) {
      c.data = std::move(body);
      return;
    }
  }
  extra_chunks.push_back({kTranscriptChunk, std::move(body)});
}

WavAudio parse_wav(ByteView bytes, const WavLimits& limits) {
  if (bytes.size() > limits.max_bytes) {
    fail(Errc::too_large, "wav exceeds " + std::to_string(limits.max_bytes) + " bytes");
  }
  LeReader in(bytes);
  if (bytes.size() < 12 || in.id(0) != chunk_id("RIFF") || in.id(8) != chunk_id("WAVE")) {
    fail(Errc::not_riff, "missing RIFF/WAVE header");
  }
  const std::uint64_t riff_end = std::uint64_t{in.u32(4)} + 8;
  if (riff_end > bytes.size()) fail(Errc::truncated_chunk, "RIFF size exceeds file length");

  WavAudio audio;
  bool have_fmt = false;
  std::optional<ByteView> data;
  std::size_t pos = 12;
  while (pos < riff_end) {
    if (riff_end - pos < 8) fail(Errc::truncated_chunk, "chunk header truncated");
    const ChunkId id = in.id(pos);
    const std::uint32_t size = in.u32(pos + 4);
    const std::size_t body = pos + 8;
    if (size > riff_end - body) fail(Errc::truncated_chunk, "chunk '" + id_string(id) + "' overruns file");
    auto payload = bytes.subspan(body, size);

    if (id == kFmt) {
      if (have_fmt) fail(Errc::unsupported_encoding, "duplicate fmt chunk");
      if (size != 16) fail(Errc::unsupported_encoding, "fmt chunk must be 16-byte PCM");
      const auto format = in.u16(body);
      const auto channels = in.u16(body + 2);
      const auto rate = in.u32(body + 4);
      const auto byte_rate = in.u32(body + 8);
      const auto align = in.u16(body + 12);
      const auto bits = in.u16(body + 14);
      if (format != 1) fail(Errc::unsupported_encoding, "only PCM (format 1) is accepted");
      if (bits != 16) fail(Errc::unsupported_encoding, "only 16-bit samples are accepted");
      if (channels < 1 || channels > 2) fail(Errc::unsupported_encoding, "channels must be 1 or 2");
      if (rate < kMinSampleRate || rate > kMaxSampleRate) {
        fail(Errc::unsupported_encoding, "sample rate out of range");
      }
      if (align != channels * 2 || byte_rate != rate * align) {
        fail(Errc::unsupported_encoding, "inconsistent block align or byte rate");
      }
      audio.channels = channels;
      audio.sample_rate = rate;
      audio.bits_per_sample = bits;
      have_fmt = true;
    } else if (id == kData) {
      if (data) fail(Errc::unsupported_encoding, "duplicate data chunk");
      data = payload;
    } else {
      audio.extra_chunks.push_back({id, Bytes(payload.begin(), payload.end())});
    }
    // A missing pad byte on the final chunk is tolerated.
    pos = body + size + (size & 1u);
  }

  if (!have_fmt) fail(Errc::truncated_chunk, "missing fmt chunk");
  if (!data) fail(Errc::truncated_chunk, "missing data chunk");
  if (data->size() % (audio.channels * 2u) != 0) {
    fail(Errc::truncated_chunk, "data chunk is not a whole number of frames");
  }

  const std::uint64_t frames = data->size() / (audio.channels * 2u);
  if (frames * 1000 / audio.sample_rate > limits.max_duration_ms) {
    fail(Errc::too_long, "audio longer than " + std::to_string(limits.max_duration_ms) + " ms");
  }

  audio.samples.resize(data->size() / 2);
  for (std::size_t i = 0; i < audio.samples.size(); ++i) {
    audio.samples[i] = static_cast<std::int16_t>(static_cast<std::uint16_t>((*data)[2 * i] | ((*data)[2 * i + 1] << 8)));
  }
  return audio;
}

Bytes write_wav(const WavAudio& audio) {
  if (audio.bits_per_sample != 16) fail(Errc::invalid_argument, "bits_per_sample must be 16");
  if (audio.channels < 1 || audio.channels > 2) fail(Errc::invalid_argument, "channels must be 1 or 2");
  if (audio.sample_rate < kMinSampleRate || audio.sample_rate > kMaxSampleRate) {
    fail(Errc::invalid_argument, "sample rate out of range");
  }
  if (audio.samples.size() % audio.channels != 0) fail(Errc::invalid_argument, "partial frame");
  for (const auto& c : audio.extra_chunks) {
    if (c.id == kFmt || c.id == kData) fail(Errc::invalid_argument, "extra chunk may not be fmt or data");
  }

  const std::size_t data_bytes = audio.samples.size() * 2;
  std::size_t total = 12 + 24 + 8 + data_bytes + (data_bytes & 1u);
  for (const auto& c : audio.extra_chunks) total += 8 + c.data.size() + (c.data.size() & 1u);
  if (total - 8 > 0xffffffffu) fail(Errc::invalid_argument, "audio too large for RIFF");

  Bytes out;
  out.reserve(total);
  put_id(out, chunk_id("RIFF"));
  put_u32(out, static_cast<std::uint32_t>(total - 8));
  put_id(out, chunk_id("WAVE"));

  const auto align = static_cast<std::uint16_t>(audio.channels * 2);
  put_id(out, kFmt);
  put_u32(out, 16);
  put_u16(out, 1);
  put_u16(out, audio.channels);
  put_u32(out, audio.sample_rate);
  put_u32(out, audio.sample_rate * align);
  put_u16(out, align);
  put_u16(out, 16);

  put_id(out, kData);
  put_u32(out, static_cast<std::uint32_t>(data_bytes));
  for (auto s : audio.samples) put_u16(out, static_cast<std::uint16_t>(s));

  for (const auto& c : audio.extra_chunks) {
    put_id(out, c.id);
    put_u32(out, static_cast<std::uint32_t>(c.data.size()));
    out.insert(out.end(), c.data.begin(), c.data.end());
    if (c.data.size() & 1u) out.push_back(0);
  }
  return out;
}

std::size_t word_count(std::string_view text) {
  std::size_t words = 0;
  bool in_word = false;
  for (char c : text) {
    const bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
    if (!space && !in_word) ++words;
    in_word = !space;
  }
  return words;
}

double tone_frequency(std::string_view text, const ToneParams& params) {
  return params.base_hz + static_cast<double>(sha256(text)[0] % 16) * params.step_hz;
}

std::uint64_t tone_duration_ms(std::string_view text, const ToneParams& params) {
  return std::max<std::uint64_t>(params.min_duration_ms, params.ms_per_word * word_count(text));
}

WavAudio synth_tone(std::string_view text, const ToneParams& params) {
  WavAudio audio;
  audio.sample_rate = params.sample_rate;
  audio.channels = 1;
  const double freq = tone_frequency(text, params);
  const std::uint64_t frames = tone_duration_ms(text, params) * params.sample_rate / 1000;
  audio.samples.resize(frames);
  const double peak = params.amplitude * 32767.0;
  for (std::uint64_t n = 0; n < frames; ++n) {
    const double phase = 2.0 * std::numbers::pi * freq * static_cast<double>(n) / params.sample_rate;
    audio.samples[n] = static_cast<std::int16_t>(std::lround(peak * std::sin(phase)));
  }
  audio.set_transcript(text);
  return audio;
}

WavAudio make_voice_clip(std::string_view transcript, std::uint64_t duration_ms, std::uint32_t sample_rate) {
  WavAudio audio;
  audio.sample_rate = sample_rate;
  const std::uint64_t frames = duration_ms * sample_rate / 1000;
  audio.samples.resize(frames);
  // Linear chirp 200 Hz -> 800 Hz, loud enough to be more than silence.
  const double seconds = static_cast<double>(frames) / sample_rate;
  for (std::uint64_t n = 0; n < frames; ++n) {
    const double t = static_cast<double>(n) / sample_rate;
    const double f = 200.0 + (seconds > 0 ? 600.0 * t / (2.0 * seconds) : 0.0);
    audio.samples[n] = static_cast<std::int16_t>(std::lround(8000.0 * std::sin(2.0 * std::numbers::pi * f * t)));
  }
  audio.set_transcript(transcript);
  return audio;
}

Hash32 audio_hash(ByteView bytes) { return sha256(bytes); }

}  // namespace vnode
