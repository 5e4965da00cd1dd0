#pragma once

#include <json.hpp>

#include "vnode/identity.hpp"
#include "vnode/ledger.hpp"
#include "vnode/metrics.hpp"
#include "vnode/posts.hpp"

namespace vnode::codec {

using nlohmann::json;

json tx_json(const Transaction& tx);
json block_to_json(const Block& block);
json receipt_json(const Receipt& r);
json tx_record_json(const TxRecord& rec);
json verification_to_json(const VerificationReport& report);
json metrics_to_json(const MetricsReport& report);
json profile_json(const UserProfile& user);
json post_json(const VoicePost& post, const UserProfile& author);
json feed_item_json(const FeedItem& item);
json tx_details_json(const TxDetails& d);
json post_transactions_json(const PostTransactions& p);

/// Compact dump plus a trailing newline; used for every HTTP JSON body.
std::string body(const json& j);

}  // namespace vnode::codec
