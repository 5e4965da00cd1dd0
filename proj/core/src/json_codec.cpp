#include "json_codec.hpp"

#include "vnode/codec.hpp"

namespace vnode::codec {
namespace {

std::string audio_url(const PostId& id, LanguageCode lang) {
  return "/api/v1/posts/" + to_hex(id) + "/audio?lang=" + std::string(lang.code());
}

}  // namespace

json tx_json(const Transaction& tx) {
  return {{"hash", to_hex(tx_hash(tx))},
          {"version", tx.version},
          {"kind", tx_kind_name(tx.kind)},
          {"sender", tx.sender.to_string()},
          {"nonce", tx.nonce},
          {"timestamp_ms", tx.timestamp_ms},
          {"payload", to_hex(tx.payload)},
          {"public_key", to_hex(tx.public_key)},
          {"signature", to_hex(tx.signature)}};
}

json block_to_json(const Block& block) {
  json txs = json::array();
  for (const auto& tx : block.transactions) txs.push_back(tx_json(tx));
  const auto& h = block.header;
  return {{"height", h.height},
          {"hash", to_hex(block.hash())},
          {"version", h.version},
          {"prev_hash", to_hex(h.prev_hash)},
          {"timestamp_ms", h.timestamp_ms},
          {"tx_count", h.tx_count},
          {"tx_root", to_hex(h.tx_root)},
          {"transactions", std::move(txs)}};
}

json receipt_json(const Receipt& r) {
  return {{"tx_hash", to_hex(r.tx_hash)},
          {"block_height", r.block_height},
          {"block_hash", to_hex(r.block_hash)},
          {"gas_used", r.gas_used},
          {"cost_wei", wei_to_string(r.cost_wei)},
          {"cost_eth", wei_to_eth(r.cost_wei)}};
}

json tx_record_json(const TxRecord& rec) {
  return {{"transaction", tx_json(rec.tx)}, {"receipt", receipt_json(rec.receipt)}};
}

json verification_to_json(const VerificationReport& report) {
  json err = nullptr;
  if (report.first_error) err = {{"height", report.first_error->height}, {"reason", report.first_error->reason}};
  return {{"ok", report.ok}, {"blocks_checked", report.blocks_checked}, {"first_error", err}};
}

json metrics_to_json(const MetricsReport& report) {
  json stages = json::object();
  for (const auto& [stage, s] : report.stages) {
    stages[std::string(stage_name(stage))] = {
        {"count", s.count}, {"p50_ms", s.p50_ms}, {"p95_ms", s.p95_ms}, {"mean_ms", s.mean_ms}};
  }
  json costs = json::object();
  for (const auto& [kind, c] : report.costs) {
    costs[std::string(tx_kind_name(kind))] = {{"count", c.count}, {"mean_cost_wei", wei_to_string(c.mean_cost_wei)}};
  }
  return {{"window_start", report.window_start}, {"stages", stages}, {"costs", costs}};
}

json profile_json(const UserProfile& user) {
  return {{"user_id", to_hex(user.user_id)},
          {"username", user.username},
          {"default_lang", user.default_lang.code()},
          {"default_lang_name", user.default_lang.display_name()},
          {"address", user.address.to_string()},
          {"public_key", to_hex(user.public_key)},
          {"picture", user.picture_ref ? json(*user.picture_ref) : json(nullptr)},
          {"created_at", user.created_at}};
}

json post_json(const VoicePost& post, const UserProfile& author) {
  return {{"post_id", to_hex(post.post_id)},
          {"author", author.username},
          {"lang", post.lang.code()},
          {"transcript", post.transcript},
          {"audio_hash", to_hex(post.audio_hash)},
          {"audio_url", audio_url(post.post_id, post.lang)},
          {"created_at", post.created_at},
          {"tx", receipt_json(post.tx)}};
}

json feed_item_json(const FeedItem& item) {
  const bool translated = item.audio_source == AudioSource::translated;
  json j = {{"post_id", to_hex(item.post_id)},
            {"author", item.author_username},
            {"original_lang", item.original_lang.code()},
            {"created_at", item.created_at},
            {"viewer_lang", item.viewer_lang.code()},
            {"text", item.text_for_viewer},
            {"audio_source", translated ? "translated" : "original"},
            {"audio_url", audio_url(item.post_id, translated ? item.viewer_lang : item.original_lang)},
            {"post_tx", to_hex(item.post_tx)},
            {"translation_tx", item.translation_tx ? json(to_hex(*item.translation_tx)) : json(nullptr)},
            {"translation_failed", item.translation_failed}};
  if (translated) j["engine_id"] = item.engine_id;
  if (!item.error.empty()) j["error"] = item.error;
  return j;
}

json tx_details_json(const TxDetails& d) {
  return {{"kind", tx_kind_name(d.kind)},
          {"tx_hash", to_hex(d.tx_hash)},
          {"block_height", d.block_height},
          {"block_hash", to_hex(d.block_hash)},
          {"sender_address", d.sender.to_string()},
          {"lang", d.lang},
          {"text", d.text},
          {"timestamp_ms", d.timestamp_ms},
          {"cost_wei", wei_to_string(d.cost_wei)},
          {"cost_eth", wei_to_eth(d.cost_wei)}};
}

json post_transactions_json(const PostTransactions& p) {
  return {{"post_id", to_hex(p.post_id)},
          {"post", tx_details_json(p.post)},
          {"translation", p.translation ? tx_details_json(*p.translation) : json(nullptr)}};
}

std::string body(const json& j) { return j.dump() + "\n"; }

}  // namespace vnode::codec

namespace vnode {

std::string block_json(const Block& block) { return codec::body(codec::block_to_json(block)); }
std::string verification_json(const VerificationReport& report) {
  return codec::body(codec::verification_to_json(report));
}
std::string metrics_report_json(const MetricsReport& report) { return codec::body(codec::metrics_to_json(report)); }

}  // namespace vnode
