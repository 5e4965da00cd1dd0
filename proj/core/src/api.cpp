#include "vnode/api.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>

#include <httplib.h>

#include "json_codec.hpp"
#include "vnode/codec.hpp"

namespace vnode {
namespace {

using codec::json;
using httplib::Request;
using httplib::Response;

constexpr std::size_t kMultipartAllowance = 64 * 1024;

void send_json(Response& res, const json& j, int status = 200) {
  res.status = status;
  res.set_content(codec::body(j), "application/json");
}

void send_error(Response& res, int status, std::string_view code, std::string_view message) {
  send_json(res, {{"error", code}, {"message", message}}, status);
}

std::string_view default_code_for(int status) {
  switch (status) {
    case 400: return "invalid_argument";
    case 401: return "unauthorized";
    case 404: return "not_found";
    case 405: return "method_not_allowed";
    case 413: return "too_large";
    default: return "internal";
  }
}

std::string server_timing(const Trace& trace) {
  std::string out;
  char buf[64];
  for (const auto& t : trace) {
    if (!out.empty()) out += ", ";
    std::snprintf(buf, sizeof buf, ";dur=%.3f", t.duration_ms);
    out += std::string(stage_name(t.stage)) + buf;
  }
  return out;
}

void attach_timing(Response& res, const Trace& trace) {
  if (!trace.empty()) res.set_header("Server-Timing", server_timing(trace));
}

json parse_body(const Request& req) {
  auto j = json::parse(req.body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) fail(Errc::invalid_argument, "request body must be a JSON object");
  return j;
}

std::string string_field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) fail(Errc::invalid_argument, std::string("missing string field '") + key + "'");
  return it->get<std::string>();
}

std::optional<std::string> query(const Request& req, const char* key) {
  if (!req.has_param(key)) return std::nullopt;
  auto v = req.get_param_value(key);
  if (v.empty()) return std::nullopt;
  return v;
}

std::optional<LanguageCode> lang_param(const Request& req) {
  auto v = query(req, "lang");
  if (!v) return std::nullopt;
  return resolve_language(*v);
}

std::uint64_t u64_param(const std::string& text, const char* what) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size()) {
    fail(Errc::invalid_argument, std::string(what) + " must be a non-negative integer");
  }
  return v;
}

PostId post_id_param(const Request& req) {
  auto id = parse_post_id(req.matches[1].str());
  if (!id) fail(Errc::unknown_post, "no post " + req.matches[1].str());
  return *id;
}

template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f = std::move(f)](const Request& req, Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      send_error(res, http_status(e.code()), errc_name(e.code()), e.what());
    } catch (const json::exception& e) {
      send_error(res, 400, "invalid_argument", e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "internal", e.what());
    }
  };
}

}  // namespace

int http_status(Errc code) {
  switch (code) {
    case Errc::invalid_argument:
    case Errc::invalid_username:
    case Errc::weak_password:
    case Errc::self_follow:
    case Errc::bad_key_length:
    case Errc::bad_cursor:
    case Errc::range_out_of_bounds:
    case Errc::config_error:
      return 400;
    case Errc::invalid_credentials:
    case Errc::unauthorized:
      return 401;
    case Errc::unknown_user:
    case Errc::not_found:
    case Errc::unknown_post:
      return 404;
    case Errc::username_taken:
      return 409;
    case Errc::payload_too_large:
    case Errc::too_large:
    case Errc::too_long:
      return 413;
    case Errc::unsupported_language:
    case Errc::not_riff:
    case Errc::unsupported_encoding:
    case Errc::truncated_chunk:
    case Errc::no_transcript_chunk:
      return 422;
    case Errc::engine_unavailable:
      return 503;
    case Errc::storage_failure:
    case Errc::schema_mismatch:
    case Errc::unwritable:
    case Errc::corrupt_blob:
    case Errc::bind_failure:
      return 500;
  }
  return 500;
}

ApiServer::ApiServer(Node& node) : node_(node), server_(std::make_unique<httplib::Server>()) { install_routes(); }

ApiServer::~ApiServer() { stop(); }

std::uint16_t ApiServer::bind(const std::string& host, std::uint16_t port) {
  int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (bound <= 0) fail(Errc::bind_failure, "cannot bind " + host + ":" + std::to_string(port));
  return static_cast<std::uint16_t>(bound);
}

void ApiServer::run() { server_->listen_after_bind(); }

void ApiServer::stop() {
  if (server_) server_->stop();
}

void ApiServer::install_routes() {
  auto& s = *server_;
  Node& node = node_;
  const auto& cfg = node.config();

  s.set_payload_max_length(cfg.max_wav_bytes + kMultipartAllowance);
  s.set_error_handler([](const Request&, Response& res) {
    if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
    const auto code = default_code_for(res.status);
    send_error(res, res.status, code, httplib::status_message(res.status));
    return httplib::Server::HandlerResponse::Handled;
  });
  if (!cfg.static_dir.empty()) s.set_mount_point("/", cfg.static_dir.string());

  auto authed = [&node](const Request& req) {
    const auto header = req.get_header_value("Authorization");
    constexpr std::string_view prefix = "Bearer ";
    if (header.compare(0, prefix.size(), prefix) != 0) fail(Errc::unauthorized, "missing bearer token");
    return node.identity().authenticate(std::string_view(header).substr(prefix.size()));
  };

  s.Get("/api/v1/health", guarded([&node](const Request&, Response& res) {
          send_json(res, {{"mode", mode_name(node.config().mode)},
                          {"height", node.ledger().block_count()},
                          {"engine", node.engine().descriptor().engine_id},
                          {"version", "0.1.0"}});
        }));

  s.Get("/api/v1/languages", guarded([](const Request&, Response& res) {
          json out = json::array();
          for (auto l : supported_languages()) out.push_back({{"code", l.code()}, {"display_name", l.display_name()}});
          send_json(res, out);
        }));

  s.Post("/api/v1/register", guarded([&node](const Request& req, Response& res) {
           auto body = parse_body(req);
           auto lang = body.contains("default_lang") ? string_field(body, "default_lang") : std::string("eng");
           auto user = node.identity().register_user(string_field(body, "username"), string_field(body, "password"), lang);
           send_json(res, codec::profile_json(user), 201);
         }));

  s.Post("/api/v1/login", guarded([&node](const Request& req, Response& res) {
           auto body = parse_body(req);
           auto session = node.identity().login(string_field(body, "username"), string_field(body, "password"));
           auto user = node.identity().get(session.user_id);
           send_json(res, {{"token", session.token}, {"expires_at", session.expires_at}, {"user", codec::profile_json(user)}});
         }));

  s.Get("/api/v1/profile", guarded([authed](const Request& req, Response& res) {
          send_json(res, codec::profile_json(authed(req)));
        }));

  s.Put("/api/v1/profile", guarded([&node, authed](const Request& req, Response& res) {
          auto user = authed(req);
          auto body = parse_body(req);
          send_json(res, codec::profile_json(
                             node.identity().set_default_language(user.user_id, string_field(body, "default_lang"))));
        }));

  s.Put("/api/v1/profile/picture", guarded([&node, authed](const Request& req, Response& res) {
          auto user = authed(req);
          send_json(res, codec::profile_json(node.identity().set_picture(user.user_id, as_bytes(req.body))));
        }));

  s.Get("/api/v1/profile/picture", guarded([&node, authed](const Request& req, Response& res) {
          auto user = authed(req);
          if (!user.picture_ref) fail(Errc::not_found, "no profile picture");
          auto bytes = node.store().blobs().get(*user.picture_ref);
          auto type = sniff_image_type(bytes).value_or("octet-stream");
          res.set_content(to_string(bytes), type == "octet-stream" ? "application/octet-stream" : "image/" + type);
        }));

  s.Post(R"(/api/v1/users/([^/]+)/follow)", guarded([&node, authed](const Request& req, Response& res) {
           auto user = authed(req);
           auto edge = node.identity().follow(user.user_id, req.matches[1].str());
           send_json(res, {{"follower", user.username}, {"followee", req.matches[1].str()}, {"since", edge.since}});
         }));

  s.Delete(R"(/api/v1/users/([^/]+)/follow)", guarded([&node, authed](const Request& req, Response& res) {
             auto user = authed(req);
             bool removed = node.identity().unfollow(user.user_id, req.matches[1].str());
             send_json(res, {{"follower", user.username}, {"followee", req.matches[1].str()}, {"removed", removed}});
           }));

  s.Post("/api/v1/posts", guarded([&node, authed](const Request& req, Response& res) {
           auto user = authed(req);
           std::string audio;
           std::optional<std::string> lang;
           if (req.is_multipart_form_data()) {
             if (!req.has_file("audio")) fail(Errc::invalid_argument, "multipart field 'audio' is required");
             audio = req.get_file_value("audio").content;
             if (req.has_file("lang") && !req.get_file_value("lang").content.empty()) {
               lang = req.get_file_value("lang").content;
             }
           } else {
             audio = req.body;
             lang = query(req, "lang");
           }
           Trace trace;
           auto post = node.posts().create_post(user, as_bytes(audio), lang, &trace);
           attach_timing(res, trace);
           send_json(res, codec::post_json(post, user), 201);
         }));

  s.Get("/api/v1/timeline", guarded([&node, authed](const Request& req, Response& res) {
          auto user = authed(req);
          std::size_t limit = 20;
          if (auto l = query(req, "limit")) limit = u64_param(*l, "limit");
          auto page = node.posts().timeline(user, query(req, "cursor"), limit, lang_param(req));
          json items = json::array();
          for (const auto& item : page.items) items.push_back(codec::feed_item_json(item));
          send_json(res, {{"items", items}, {"next_cursor", page.next_cursor ? json(*page.next_cursor) : json(nullptr)}});
        }));

  s.Get(R"(/api/v1/posts/([^/]+)/audio)", guarded([&node, authed](const Request& req, Response& res) {
          auto user = authed(req);
          auto id = post_id_param(req);
          auto lang = lang_param(req).value_or(user.default_lang);
          Trace trace;
          auto bytes = node.posts().audio(id, lang, &trace);
          attach_timing(res, trace);
          res.set_header("X-Audio-Lang", std::string(lang.code()));
          res.set_content(to_string(bytes), "audio/wav");
        }));

  s.Get(R"(/api/v1/posts/([^/]+)/transcript)", guarded([&node, authed](const Request& req, Response& res) {
          auto user = authed(req);
          Trace trace;
          auto item = node.posts().resolve_for_viewer(post_id_param(req), user, lang_param(req), &trace);
          attach_timing(res, trace);
          send_json(res, codec::feed_item_json(item));
        }));

  s.Get(R"(/api/v1/posts/([^/]+)/tx)", guarded([&node, authed](const Request& req, Response& res) {
          auto user = authed(req);
          auto details = node.posts().transaction_details(post_id_param(req), lang_param(req).value_or(user.default_lang));
          send_json(res, codec::post_transactions_json(details));
        }));

  s.Get(R"(/api/v1/ledger/blocks/([^/]+))", guarded([&node](const Request& req, Response& res) {
          const auto height = u64_param(req.matches[1].str(), "height");
          if (height >= node.ledger().block_count()) fail(Errc::not_found, "no block at height " + req.matches[1].str());
          res.set_content(block_json(node.ledger().block(height)), "application/json");
        }));

  s.Get(R"(/api/v1/ledger/tx/([^/]+))", guarded([&node](const Request& req, Response& res) {
          auto hash = array_from_hex<32>(req.matches[1].str());
          if (!hash) fail(Errc::invalid_argument, "transaction hash must be 64 hex digits");
          send_json(res, codec::tx_record_json(node.ledger().get_transaction(*hash)));
        }));

  s.Get("/api/v1/ledger/verify", guarded([&node](const Request& req, Response& res) {
          const auto count = node.ledger().block_count();
          std::uint64_t from = 0;
          std::uint64_t to = count - 1;
          if (auto v = query(req, "from")) from = u64_param(*v, "from");
          if (auto v = query(req, "to")) to = u64_param(*v, "to");
          res.set_content(verification_json(node.ledger().verify(from, to)), "application/json");
        }));

  s.Get("/api/v1/metrics", guarded([&node](const Request&, Response& res) {
          res.set_content(metrics_report_json(node.metrics().report()), "application/json");
        }));
}

}  // namespace vnode
