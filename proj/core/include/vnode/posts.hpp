#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vnode/engine.hpp"
#include "vnode/identity.hpp"
#include "vnode/ledger.hpp"
#include "vnode/media.hpp"
#include "vnode/metrics.hpp"
#include "vnode/storage.hpp"

namespace vnode {

using PostId = std::array<std::uint8_t, 16>;

/// Post transaction payload:
/// post_id(16) | lang_len(u8) | lang | audio_hash(32) | text_len(u32 BE) | text
struct PostPayload {
  PostId post_id{};
  std::string lang;
  Hash32 audio_hash{};
  std::string transcript;

  Bytes encode() const;
  static std::optional<PostPayload> decode(ByteView payload);
  friend bool operator==(const PostPayload&, const PostPayload&) = default;
};

/// Translation transaction payload:
/// post_id(16) | lang_len(u8) | lang | engine_id_len(u8) | engine_id |
/// text_len(u32 BE) | text
struct TranslationPayload {
  PostId post_id{};
  std::string lang;
  std::string engine_id;
  std::string text;

  Bytes encode() const;
  static std::optional<TranslationPayload> decode(ByteView payload);
  friend bool operator==(const TranslationPayload&, const TranslationPayload&) = default;
};

struct VoicePost {
  PostId post_id{};
  UserId author{};
  LanguageCode lang;
  std::string audio_ref;
  Hash32 audio_hash{};
  std::string transcript;
  std::int64_t created_at = 0;
  Receipt tx;
};

struct TranslationRecord {
  PostId post_id{};
  LanguageCode target_lang;
  std::string text;
  std::string audio_ref;
  std::string engine_id;
  Receipt tx;
};

enum class AudioSource { original, translated };

struct FeedItem {
  PostId post_id{};
  std::string author_username;
  LanguageCode original_lang;
  std::int64_t created_at = 0;
  LanguageCode viewer_lang;
  std::string text_for_viewer;
  AudioSource audio_source = AudioSource::original;
  std::string engine_id;  // set for translated items
  Hash32 post_tx{};
  std::optional<Hash32> translation_tx;
  /// Translation was needed but failed; the item carries the original.
  bool translation_failed = false;
  std::string error;
};

struct TimelinePage {
  std::vector<FeedItem> items;
  std::optional<std::string> next_cursor;
};

struct TxDetails {
  TxKind kind = TxKind::post;
  Hash32 tx_hash{};
  std::uint64_t block_height = 0;
  Hash32 block_hash{};
  Address sender;
  std::string lang;
  std::string text;
  std::uint64_t timestamp_ms = 0;
  Wei cost_wei = 0;
};

struct PostTransactions {
  PostId post_id{};
  TxDetails post;
  std::optional<TxDetails> translation;
};

/// Per-request stage timings (fed to Server-Timing headers).
using Trace = std::vector<StageTiming>;

constexpr std::size_t kMaxTimelineLimit = 50;

struct PostOptions {
  WavLimits wav_limits;
  Clock clock;
  /// Test hook invoked at named points of the two-phase commits.
  std::function<void(std::string_view point)> fault_hook;
};

std::optional<PostId> parse_post_id(std::string_view hex);
std::string encode_cursor(std::int64_t created_at, const PostId& post_id);
/// Throws bad_cursor.
std::pair<std::int64_t, PostId> decode_cursor(std::string_view cursor);

class PostService {
 public:
  PostService(Store& store, IdentityService& identity, SpeechEngine& engine, Metrics* metrics,
              PostOptions options = {});

  /// Stores the WAV, transcribes it and logs a post transaction signed by the
  /// author. Nothing is left behind when any step fails.
  VoicePost create_post(const UserProfile& author, ByteView wav_bytes, std::optional<std::string_view> lang,
                        Trace* trace = nullptr);

  /// Original audio when the viewer's language matches, otherwise the
  /// translation, created at most once per (post, language).
  FeedItem resolve_for_viewer(const PostId& post_id, const UserProfile& viewer,
                              std::optional<LanguageCode> lang_override = std::nullopt, Trace* trace = nullptr);

  /// Posts by the viewer's followees, newest first (ties by post id).
  /// Throws bad_cursor or invalid_argument (limit outside 1..50).
  TimelinePage timeline(const UserProfile& viewer, std::optional<std::string_view> cursor, std::size_t limit,
                        std::optional<LanguageCode> lang_override = std::nullopt);

  PostTransactions transaction_details(const PostId& post_id, std::optional<LanguageCode> viewer_lang);

  /// Audio bytes in `lang`: the ingested file or the synthesized translation.
  Bytes audio(const PostId& post_id, LanguageCode lang, Trace* trace = nullptr);
  /// Throws the engine or ledger error instead of degrading.
  TranslationRecord ensure_translation(const VoicePost& post, LanguageCode lang, Trace* trace = nullptr);

  std::optional<VoicePost> find_post(const PostId& post_id) const;
  /// Throws unknown_post.
  VoicePost get_post(const PostId& post_id) const;
  std::optional<TranslationRecord> find_translation(const PostId& post_id, LanguageCode lang) const;
  std::vector<TranslationRecord> translations_of(const PostId& post_id) const;
  std::vector<VoicePost> all_posts() const;

  /// Completes or rolls back half-finished posts and translations, then drops
  /// unreferenced blobs. Returns the number of rows repaired.
  std::size_t recover();

  SpeechEngine& engine() { return engine_; }

 private:
  using FlightKey = std::pair<PostId, std::uint8_t>;

  std::int64_t now() const;
  void hook(std::string_view point) const;
  TranslationRecord create_translation(const VoicePost& post, LanguageCode lang, Trace* trace);
  // Caller holds blob_mu_.
  void release_blob_locked(const std::string& ref);
  TxDetails details_for(const Hash32& tx_hash) const;
  template <typename F>
  auto timed(Stage stage, Trace* trace, F&& f);

  Store& store_;
  IdentityService& identity_;
  SpeechEngine& engine_;
  Metrics* metrics_;
  PostOptions options_;

  std::mutex blob_mu_;
  std::mutex flight_mu_;
  std::map<FlightKey, std::shared_future<TranslationRecord>> in_flight_;
};

}  // namespace vnode
