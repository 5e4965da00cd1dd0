#include "vnode/posts.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <set>

#include "vnode/error.hpp"

namespace vnode {
namespace {

constexpr const char* kPostColumns =
    "post_id, author, lang, audio_ref, audio_hash, transcript, created_at, tx_hash, block_height, block_hash, "
    "gas_used, cost_wei";
constexpr const char* kTranslationColumns =
    "post_id, target_lang, text, audio_ref, engine_id, tx_hash, block_height, block_hash, gas_used, cost_wei";

Receipt read_receipt(const Statement& st, int first) {
  Receipt r;
  if (st.is_null(first)) return r;
  r.tx_hash = st.array<32>(first);
  r.block_height = static_cast<std::uint64_t>(st.int64(first + 1));
  r.block_hash = st.array<32>(first + 2);
  r.gas_used = static_cast<std::uint64_t>(st.int64(first + 3));
  r.cost_wei = parse_wei(st.text(first + 4)).value_or(0);
  return r;
}

VoicePost read_post(const Statement& st) {
  VoicePost p;
  p.post_id = st.array<16>(0);
  p.author = st.array<16>(1);
  p.lang = resolve_language(st.text(2));
  p.audio_ref = st.text(3);
  p.audio_hash = st.array<32>(4);
  p.transcript = st.text(5);
  p.created_at = st.int64(6);
  p.tx = read_receipt(st, 7);
  return p;
}

TranslationRecord read_translation(const Statement& st) {
  TranslationRecord t;
  t.post_id = st.array<16>(0);
  t.target_lang = resolve_language(st.text(1));
  t.text = st.text(2);
  t.audio_ref = st.text(3);
  t.engine_id = st.text(4);
  t.tx = read_receipt(st, 5);
  return t;
}

void bind_receipt(Statement& st, int first, const Receipt& r) {
  st.bind_blob(first, r.tx_hash)
      .bind(first + 1, static_cast<std::int64_t>(r.block_height))
      .bind_blob(first + 2, r.block_hash)
      .bind(first + 3, static_cast<std::int64_t>(r.gas_used))
      .bind(first + 4, wei_to_string(r.cost_wei));
}

std::optional<std::string> read_short_string(BeReader& in) {
  auto len = in.u8();
  if (!len) return std::nullopt;
  auto body = in.take(*len);
  if (!body) return std::nullopt;
  return to_string(*body);
}

std::optional<std::string> read_long_string(BeReader& in) {
  auto len = in.u32();
  if (!len) return std::nullopt;
  auto body = in.take(*len);
  if (!body) return std::nullopt;
  return to_string(*body);
}

}  // namespace

// ---------------------------------------------------------------------------
// Payloads

Bytes PostPayload::encode() const {
  Bytes out;
  BeWriter w(out);
  w.raw(post_id);
  w.u8(static_cast<std::uint8_t>(lang.size()));
  w.raw(lang);
  w.raw(audio_hash);
  w.u32(static_cast<std::uint32_t>(transcript.size()));
  w.raw(transcript);
  return out;
}

std::optional<PostPayload> PostPayload::decode(ByteView payload) {
  BeReader in(payload);
  PostPayload p;
  auto id = in.array<16>();
  if (!id) return std::nullopt;
  p.post_id = *id;
  auto lang = read_short_string(in);
  auto hash = in.array<32>();
  if (!lang || !hash) return std::nullopt;
  p.lang = *lang;
  p.audio_hash = *hash;
  auto text = read_long_string(in);
  if (!text || !in.done()) return std::nullopt;
  p.transcript = *text;
  return p;
}

Bytes TranslationPayload::encode() const {
  Bytes out;
  BeWriter w(out);
  w.raw(post_id);
  w.u8(static_cast<std::uint8_t>(lang.size()));
  w.raw(lang);
  w.u8(static_cast<std::uint8_t>(engine_id.size()));
  w.raw(engine_id);
  w.u32(static_cast<std::uint32_t>(text.size()));
  w.raw(text);
  return out;
}

std::optional<TranslationPayload> TranslationPayload::decode(ByteView payload) {
  BeReader in(payload);
  TranslationPayload p;
  auto id = in.array<16>();
  if (!id) return std::nullopt;
  p.post_id = *id;
  auto lang = read_short_string(in);
  auto engine = lang ? read_short_string(in) : std::nullopt;
  auto text = engine ? read_long_string(in) : std::nullopt;
  if (!text || !in.done()) return std::nullopt;
  p.lang = *lang;
  p.engine_id = *engine;
  p.text = *text;
  return p;
}

std::optional<PostId> parse_post_id(std::string_view hex) {
  if (hex.size() != 32) return std::nullopt;
  return array_from_hex<16>(hex);
}

std::string encode_cursor(std::int64_t created_at, const PostId& post_id) {
  Bytes raw;
  BeWriter w(raw);
  w.u64(static_cast<std::uint64_t>(created_at));
  w.raw(post_id);
  return to_hex(raw);
}

std::pair<std::int64_t, PostId> decode_cursor(std::string_view cursor) {
  auto raw = cursor.size() == 48 ? from_hex(cursor) : std::nullopt;
  if (!raw) fail(Errc::bad_cursor, "malformed timeline cursor");
  BeReader in(*raw);
  const auto at = static_cast<std::int64_t>(*in.u64());
  return {at, *in.array<16>()};
}

// ---------------------------------------------------------------------------

PostService::PostService(Store& store, IdentityService& identity, SpeechEngine& engine, Metrics* metrics,
                         PostOptions options)
    : store_(store), identity_(identity), engine_(engine), metrics_(metrics), options_(std::move(options)) {}

std::int64_t PostService::now() const { return options_.clock ? options_.clock() : system_now_ms(); }

void PostService::hook(std::string_view point) const {
  if (options_.fault_hook) options_.fault_hook(point);
}

template <typename F>
auto PostService::timed(Stage stage, Trace* trace, F&& f) {
  const auto start = std::chrono::steady_clock::now();
  auto record = [&] {
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    const StageTiming t{stage, ms, system_now_ms()};
    // The ledger reports its own commits to the metrics sink.
    if (metrics_ && stage != Stage::ledger_commit) metrics_->record_stage(t);
    if (trace) trace->push_back(t);
  };
  auto result = f();
  record();
  return result;
}

VoicePost PostService::create_post(const UserProfile& author, ByteView wav_bytes,
                                   std::optional<std::string_view> lang, Trace* trace) {
  const std::int64_t received = now();
  const LanguageCode post_lang = lang ? resolve_language(*lang) : author.default_lang;
  const WavAudio audio = parse_wav(wav_bytes, options_.wav_limits);

  VoicePost post;
  post.post_id = random_array<16>();
  post.author = author.user_id;
  post.lang = post_lang;
  post.audio_hash = audio_hash(wav_bytes);
  post.created_at = received;
  post.transcript = timed(Stage::asr, trace, [&] { return engine_.asr(audio, post_lang).text; });

  {
    // Blob write and row insert are one step with respect to blob GC.
    std::lock_guard lk(blob_mu_);
    post.audio_ref = store_.blobs().put(wav_bytes, ".wav");
    try {
      hook("post_after_blob");
      store_.db().transaction([&](Database& db) {
        db.prepare(
              "INSERT INTO posts (post_id, author, lang, audio_ref, audio_hash, transcript, created_at, committed) "
              "VALUES (?, ?, ?, ?, ?, ?, ?, 0)")
            .bind_blob(1, post.post_id)
            .bind_blob(2, post.author)
            .bind(3, post.lang.code())
            .bind(4, post.audio_ref)
            .bind_blob(5, post.audio_hash)
            .bind(6, post.transcript)
            .bind(7, post.created_at)
            .run();
      });
    } catch (const Error&) {
      release_blob_locked(post.audio_ref);
      throw;
    }
  }

  try {
    hook("post_before_tx");

    const PostPayload payload{post.post_id, std::string(post.lang.code()), post.audio_hash, post.transcript};
    const KeyPair key = identity_.signing_key(author.user_id);
    post.tx = timed(Stage::ledger_commit, trace,
                    [&] { return store_.ledger().submit(TxKind::post, payload.encode(), key); });
    hook("post_after_tx");

    store_.db().transaction([&](Database& db) {
      auto st = db.prepare(
          "UPDATE posts SET committed = 1, tx_hash = ?, block_height = ?, block_hash = ?, gas_used = ?, cost_wei = ? "
          "WHERE post_id = ?");
      bind_receipt(st, 1, post.tx);
      st.bind_blob(6, post.post_id).run();
    });
  } catch (const Error&) {
    std::lock_guard lk(blob_mu_);
    store_.db().transaction(
        [&](Database& db) { db.prepare("DELETE FROM posts WHERE post_id = ?").bind_blob(1, post.post_id).run(); });
    release_blob_locked(post.audio_ref);
    throw;
  }
  return post;
}

void PostService::release_blob_locked(const std::string& ref) {
  const bool referenced = store_.db().read([&](Database& db) {
    auto st = db.prepare(
        "SELECT 1 FROM posts WHERE audio_ref = ?1 UNION ALL SELECT 1 FROM translations WHERE audio_ref = ?1 "
        "UNION ALL SELECT 1 FROM users WHERE picture_ref = ?1 LIMIT 1");
    st.bind(1, ref);
    return st.step();
  });
  if (!referenced) store_.blobs().remove(ref);
}

std::optional<VoicePost> PostService::find_post(const PostId& post_id) const {
  return store_.db().read([&](Database& db) -> std::optional<VoicePost> {
    auto st = db.prepare(std::string("SELECT ") + kPostColumns + " FROM posts WHERE post_id = ? AND committed = 1");
    st.bind_blob(1, post_id);
    if (!st.step()) return std::nullopt;
    return read_post(st);
  });
}

VoicePost PostService::get_post(const PostId& post_id) const {
  auto p = find_post(post_id);
  if (!p) fail(Errc::unknown_post, "no post " + to_hex(post_id));
  return *p;
}

std::vector<VoicePost> PostService::all_posts() const {
  return store_.db().read([&](Database& db) {
    std::vector<VoicePost> out;
    auto st = db.prepare(std::string("SELECT ") + kPostColumns +
                         " FROM posts WHERE committed = 1 ORDER BY created_at, post_id");
    while (st.step()) out.push_back(read_post(st));
    return out;
  });
}

std::optional<TranslationRecord> PostService::find_translation(const PostId& post_id, LanguageCode lang) const {
  return store_.db().read([&](Database& db) -> std::optional<TranslationRecord> {
    auto st = db.prepare(std::string("SELECT ") + kTranslationColumns +
                         " FROM translations WHERE post_id = ? AND target_lang = ? AND committed = 1");
    st.bind_blob(1, post_id).bind(2, lang.code());
    if (!st.step()) return std::nullopt;
    return read_translation(st);
  });
}

std::vector<TranslationRecord> PostService::translations_of(const PostId& post_id) const {
  return store_.db().read([&](Database& db) {
    std::vector<TranslationRecord> out;
    auto st = db.prepare(std::string("SELECT ") + kTranslationColumns +
                         " FROM translations WHERE post_id = ? AND committed = 1 ORDER BY target_lang");
    st.bind_blob(1, post_id);
    while (st.step()) out.push_back(read_translation(st));
    return out;
  });
}

TranslationRecord PostService::ensure_translation(const VoicePost& post, LanguageCode lang, Trace* trace) {
  if (auto existing = find_translation(post.post_id, lang)) return *existing;

  const FlightKey key{post.post_id, lang.index()};
  std::promise<TranslationRecord> promise;
  std::shared_future<TranslationRecord> result;
  bool leader = false;
  {
    std::lock_guard lk(flight_mu_);
    if (auto it = in_flight_.find(key); it != in_flight_.end()) {
      result = it->second;
    } else {
      result = promise.get_future().share();
      in_flight_.emplace(key, result);
      leader = true;
    }
  }
  if (!leader) return result.get();

  try {
    // A previous leader may have committed after our first lookup.
    if (auto existing = find_translation(post.post_id, lang)) {
      promise.set_value(*existing);
    } else {
      promise.set_value(create_translation(post, lang, trace));
    }
  } catch (...) {
    promise.set_exception(std::current_exception());
  }
  {
    std::lock_guard lk(flight_mu_);
    in_flight_.erase(key);
  }
  return result.get();
}

TranslationRecord PostService::create_translation(const VoicePost& post, LanguageCode lang, Trace* trace) {
  const Bytes original = store_.blobs().get(post.audio_ref);
  const WavAudio audio = parse_wav(original, options_.wav_limits);

  TranslationRecord rec;
  rec.post_id = post.post_id;
  rec.target_lang = lang;
  rec.engine_id = engine_.descriptor().engine_id;
  rec.text = timed(Stage::translate_text, trace, [&] { return engine_.t2tt(post.transcript, post.lang, lang); });
  const Bytes synthesized =
      timed(Stage::synth_speech, trace, [&] { return write_wav(engine_.s2st(audio, post.lang, lang)); });

  {
    std::lock_guard lk(blob_mu_);
    rec.audio_ref = store_.blobs().put(synthesized, ".wav");
    try {
      store_.db().transaction([&](Database& db) {
        db.prepare(
              "INSERT INTO translations (post_id, target_lang, text, audio_ref, engine_id, committed) "
              "VALUES (?, ?, ?, ?, ?, 0)")
            .bind_blob(1, rec.post_id)
            .bind(2, lang.code())
            .bind(3, rec.text)
            .bind(4, rec.audio_ref)
            .bind(5, rec.engine_id)
            .run();
      });
    } catch (const Error&) {
      release_blob_locked(rec.audio_ref);
      throw;
    }
  }

  try {
    hook("translation_before_tx");

    const TranslationPayload payload{post.post_id, std::string(lang.code()), rec.engine_id, rec.text};
    rec.tx = timed(Stage::ledger_commit, trace,
                   [&] { return store_.ledger().submit(TxKind::translation, payload.encode(), store_.translator()); });
    hook("translation_after_tx");

    store_.db().transaction([&](Database& db) {
      auto st = db.prepare(
          "UPDATE translations SET committed = 1, tx_hash = ?, block_height = ?, block_hash = ?, gas_used = ?, "
          "cost_wei = ? WHERE post_id = ? AND target_lang = ?");
      bind_receipt(st, 1, rec.tx);
      st.bind_blob(6, rec.post_id).bind(7, lang.code()).run();
    });
  } catch (const Error&) {
    std::lock_guard lk(blob_mu_);
    store_.db().transaction([&](Database& db) {
      db.prepare("DELETE FROM translations WHERE post_id = ? AND target_lang = ?")
          .bind_blob(1, rec.post_id)
          .bind(2, lang.code())
          .run();
    });
    release_blob_locked(rec.audio_ref);
    throw;
  }
  if (metrics_) {
    metrics_->record_stage(Stage::end_to_end, static_cast<double>(std::max<std::int64_t>(0, now() - post.created_at)));
  }
  return rec;
}

FeedItem PostService::resolve_for_viewer(const PostId& post_id, const UserProfile& viewer,
                                         std::optional<LanguageCode> lang_override, Trace* trace) {
  const VoicePost post = get_post(post_id);
  const auto author = identity_.find_by_id(post.author);

  FeedItem item;
  item.post_id = post.post_id;
  item.author_username = author ? author->username : std::string();
  item.original_lang = post.lang;
  item.created_at = post.created_at;
  item.viewer_lang = lang_override.value_or(viewer.default_lang);
  item.post_tx = post.tx.tx_hash;
  item.text_for_viewer = post.transcript;
  item.audio_source = AudioSource::original;
  if (item.viewer_lang == post.lang) return item;

  try {
    const TranslationRecord rec = ensure_translation(post, item.viewer_lang, trace);
    item.text_for_viewer = rec.text;
    item.audio_source = AudioSource::translated;
    item.engine_id = rec.engine_id;
    item.translation_tx = rec.tx.tx_hash;
  } catch (const Error& e) {
    item.translation_failed = true;
    item.error = std::string(errc_name(e.code())) + ": " + e.what();
  }
  return item;
}

TimelinePage PostService::timeline(const UserProfile& viewer, std::optional<std::string_view> cursor,
                                   std::size_t limit, std::optional<LanguageCode> lang_override) {
  if (limit == 0 || limit > kMaxTimelineLimit) {
    fail(Errc::invalid_argument, "limit must be between 1 and " + std::to_string(kMaxTimelineLimit));
  }
  std::optional<std::pair<std::int64_t, PostId>> after;
  if (cursor && !cursor->empty()) after = decode_cursor(*cursor);

  struct Row {
    PostId id;
    std::int64_t created_at;
  };
  auto rows = store_.db().read([&](Database& db) {
    std::vector<Row> out;
    std::string sql =
        "SELECT p.post_id, p.created_at FROM posts p JOIN follows f ON f.followee = p.author "
        "WHERE f.follower = ?1 AND p.committed = 1 AND p.author != ?1 ";
    if (after) sql += "AND (p.created_at < ?2 OR (p.created_at = ?2 AND p.post_id > ?3)) ";
    sql += "ORDER BY p.created_at DESC, p.post_id ASC LIMIT ?4";
    auto st = db.prepare(sql);
    st.bind_blob(1, viewer.user_id);
    if (after) st.bind(2, after->first).bind_blob(3, after->second);
    st.bind(4, static_cast<std::int64_t>(limit + 1));
    while (st.step()) out.push_back({st.array<16>(0), st.int64(1)});
    return out;
  });

  TimelinePage page;
  const bool more = rows.size() > limit;
  if (more) rows.resize(limit);
  for (const auto& r : rows) page.items.push_back(resolve_for_viewer(r.id, viewer, lang_override));
  if (more) page.next_cursor = encode_cursor(rows.back().created_at, rows.back().id);
  return page;
}

TxDetails PostService::details_for(const Hash32& tx_hash) const {
  const TxRecord rec = store_.ledger().get_transaction(tx_hash);
  TxDetails d;
  d.kind = rec.tx.kind;
  d.tx_hash = rec.receipt.tx_hash;
  d.block_height = rec.receipt.block_height;
  d.block_hash = rec.receipt.block_hash;
  d.sender = rec.tx.sender;
  d.timestamp_ms = rec.tx.timestamp_ms;
  d.cost_wei = rec.receipt.cost_wei;
  if (rec.tx.kind == TxKind::post) {
    if (auto p = PostPayload::decode(rec.tx.payload)) {
      d.lang = p->lang;
      d.text = p->transcript;
    }
  } else if (rec.tx.kind == TxKind::translation) {
    if (auto p = TranslationPayload::decode(rec.tx.payload)) {
      d.lang = p->lang;
      d.text = p->text;
    }
  }
  return d;
}

PostTransactions PostService::transaction_details(const PostId& post_id, std::optional<LanguageCode> viewer_lang) {
  const VoicePost post = get_post(post_id);
  PostTransactions out;
  out.post_id = post_id;
  out.post = details_for(post.tx.tx_hash);
  if (viewer_lang && *viewer_lang != post.lang) {
    if (auto rec = find_translation(post_id, *viewer_lang)) out.translation = details_for(rec->tx.tx_hash);
  }
  return out;
}

Bytes PostService::audio(const PostId& post_id, LanguageCode lang, Trace* trace) {
  const VoicePost post = get_post(post_id);
  if (lang == post.lang) {
    Bytes bytes = store_.blobs().get(post.audio_ref);
    if (audio_hash(bytes) != post.audio_hash) fail(Errc::corrupt_blob, "stored audio does not match its post");
    return bytes;
  }
  const TranslationRecord rec = ensure_translation(post, lang, trace);
  return store_.blobs().get(rec.audio_ref);
}

std::size_t PostService::recover() {
  std::size_t repaired = 0;

  std::map<PostId, Receipt> posted;
  for (const auto& rec : store_.ledger().transactions_of_kind(TxKind::post)) {
    if (auto p = PostPayload::decode(rec.tx.payload)) posted[p->post_id] = rec.receipt;
  }
  std::map<std::pair<PostId, std::string>, Receipt> translated;
  for (const auto& rec : store_.ledger().transactions_of_kind(TxKind::translation)) {
    if (auto p = TranslationPayload::decode(rec.tx.payload)) translated[{p->post_id, p->lang}] = rec.receipt;
  }

  store_.db().transaction([&](Database& db) {
    std::vector<std::pair<PostId, std::string>> pending_posts;
    {
      auto st = db.prepare("SELECT post_id, audio_ref FROM posts WHERE committed = 0");
      while (st.step()) pending_posts.emplace_back(st.array<16>(0), st.text(1));
    }
    for (const auto& [id, ref] : pending_posts) {
      if (auto it = posted.find(id); it != posted.end()) {
        auto st = db.prepare(
            "UPDATE posts SET committed = 1, tx_hash = ?, block_height = ?, block_hash = ?, gas_used = ?, "
            "cost_wei = ? WHERE post_id = ?");
        bind_receipt(st, 1, it->second);
        st.bind_blob(6, id).run();
      } else {
        db.prepare("DELETE FROM posts WHERE post_id = ?").bind_blob(1, id).run();
      }
      ++repaired;
    }

    std::vector<std::pair<PostId, std::string>> pending_translations;
    {
      auto st = db.prepare("SELECT post_id, target_lang FROM translations WHERE committed = 0");
      while (st.step()) pending_translations.emplace_back(st.array<16>(0), st.text(1));
    }
    for (const auto& key : pending_translations) {
      if (auto it = translated.find(key); it != translated.end()) {
        auto st = db.prepare(
            "UPDATE translations SET committed = 1, tx_hash = ?, block_height = ?, block_hash = ?, gas_used = ?, "
            "cost_wei = ? WHERE post_id = ? AND target_lang = ?");
        bind_receipt(st, 1, it->second);
        st.bind_blob(6, key.first).bind(7, key.second).run();
      } else {
        db.prepare("DELETE FROM translations WHERE post_id = ? AND target_lang = ?")
            .bind_blob(1, key.first)
            .bind(2, key.second)
            .run();
      }
      ++repaired;
    }
  });

  // Blobs written before a crash but never referenced by a row.
  std::set<std::string> referenced = store_.db().read([](Database& db) {
    std::set<std::string> refs;
    auto st = db.prepare(
        "SELECT audio_ref FROM posts UNION SELECT audio_ref FROM translations "
        "UNION SELECT picture_ref FROM users WHERE picture_ref IS NOT NULL");
    while (st.step()) refs.insert(st.text(0));
    return refs;
  });
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(store_.blobs().dir(), ec)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind(".tmp-", 0) == 0 || (BlobStore::hash_of(name) && !referenced.contains(name))) {
      std::filesystem::remove(entry.path(), ec);
    }
  }
  return repaired;
}

}  // namespace vnode
