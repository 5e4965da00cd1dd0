#include "vnode/bench.hpp"

#include <chrono>
#include <cstdio>
#include <sstream>

#include <httplib.h>

#include "json_codec.hpp"
#include "vnode/crypto.hpp"
#include "vnode/error.hpp"
#include "vnode/media.hpp"

namespace vnode {
namespace {

using codec::json;
using Steady = std::chrono::steady_clock;

constexpr const char* kPassword = "bench-password";
constexpr double kReferenceLatencyMs = 7800.0;
constexpr double kReferenceTxMs = 1200.0;
constexpr const char* kReferenceCostEth = "0.0000036";

double ms_since(Steady::time_point t0) {
  return std::chrono::duration<double, std::milli>(Steady::now() - t0).count();
}

std::int64_t wall_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

class Api {
 public:
  explicit Api(const std::string& server) : client_(server) {
    client_.set_read_timeout(std::chrono::seconds(120));
    client_.set_write_timeout(std::chrono::seconds(120));
  }

  httplib::Result post_json(const std::string& path, const json& body, const std::string& token = {}) {
    return client_.Post(path, headers(token), body.dump(), "application/json");
  }
  httplib::Result get(const std::string& path, const std::string& token) { return client_.Get(path, headers(token)); }
  httplib::Result upload(const std::string& token, const Bytes& wav, LanguageCode lang) {
    httplib::MultipartFormDataItems items{{"audio", to_string(wav), "clip.wav", "audio/wav"},
                                          {"lang", std::string(lang.code()), "", ""}};
    return client_.Post("/api/v1/posts", headers(token), items);
  }

  static json expect(const httplib::Result& r, int status, std::string_view what) {
    if (!r) fail(Errc::engine_unavailable, std::string(what) + ": " + httplib::to_string(r.error()));
    if (r->status != status) {
      fail(Errc::invalid_argument, std::string(what) + ": HTTP " + std::to_string(r->status) + " " + r->body);
    }
    return r->get_header_value("Content-Type").rfind("application/json", 0) == 0 ? json::parse(r->body) : json();
  }

 private:
  static httplib::Headers headers(const std::string& token) {
    if (token.empty()) return {};
    return {{"Authorization", "Bearer " + token}};
  }

  httplib::Client client_;
};

struct Account {
  std::string username;
  std::string token;
};

Account enroll(Api& api, const std::string& username, LanguageCode lang) {
  Api::expect(api.post_json("/api/v1/register",
                            {{"username", username}, {"password", kPassword}, {"default_lang", lang.code()}}),
              201, "register " + username);
  auto login = Api::expect(api.post_json("/api/v1/login", {{"username", username}, {"password", kPassword}}), 200,
                           "login " + username);
  return {username, login["token"].get<std::string>()};
}

}  // namespace

std::vector<std::pair<Stage, double>> parse_server_timing(std::string_view header) {
  std::vector<std::pair<Stage, double>> out;
  std::istringstream in{std::string(header)};
  for (std::string entry; std::getline(in, entry, ',');) {
    const auto semi = entry.find(';');
    if (semi == std::string::npos) continue;
    auto name = entry.substr(0, semi);
    name.erase(0, name.find_first_not_of(' '));
    const auto dur = entry.find("dur=", semi);
    auto stage = parse_stage(name);
    if (!stage || dur == std::string::npos) continue;
    out.emplace_back(*stage, std::strtod(entry.c_str() + dur + 4, nullptr));
  }
  return out;
}

std::pair<LanguageCode, LanguageCode> parse_lang_pair(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) fail(Errc::invalid_argument, "language pair must look like eng:fra");
  return {resolve_language(text.substr(0, colon)), resolve_language(text.substr(colon + 1))};
}

BenchResult run_bench(const BenchOptions& options) {
  BenchResult result;
  Metrics metrics;
  if (options.posts == 0) {
    result.report = metrics.report();
    return result;
  }
  auto pairs = options.pairs;
  if (pairs.empty()) pairs.emplace_back(resolve_language("eng"), resolve_language("fra"));

  Api api(options.server);
  const std::string run_tag = to_hex(random_array<4>());
  struct Lane {
    LanguageCode src, dst;
    Account author, follower;
  };
  std::vector<Lane> lanes;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto base = "bench" + run_tag + "_" + std::to_string(i);
    Lane lane{pairs[i].first, pairs[i].second, enroll(api, base + "a", pairs[i].first),
              enroll(api, base + "f", pairs[i].second)};
    Api::expect(api.post_json("/api/v1/users/" + lane.author.username + "/follow", json::object(), lane.follower.token),
                200, "follow");
    lanes.push_back(std::move(lane));
  }

  for (std::size_t n = 0; n < options.posts; ++n) {
    for (const auto& lane : lanes) {
      try {
        const auto text = "bench clip " + std::to_string(n) + " " + std::string(lane.src.code());
        const Bytes wav = write_wav(make_voice_clip(text, options.clip_ms));
        BenchCycle cycle;
        auto record = [&](const httplib::Result& r) {
          for (auto [stage, ms] : parse_server_timing(r->get_header_value("Server-Timing"))) {
            metrics.record_stage({stage, ms, wall_ms()});
            if (stage == Stage::ledger_commit) cycle.commit_ms.push_back(ms);
          }
        };

        const auto t0 = Steady::now();
        auto posted = api.upload(lane.author.token, wav, lane.src);
        auto post = Api::expect(posted, 201, "upload");
        const auto id = post["post_id"].get<std::string>();
        auto audio = api.get("/api/v1/posts/" + id + "/audio?lang=" + std::string(lane.dst.code()), lane.follower.token);
        Api::expect(audio, 200, "fetch audio");
        cycle.end_to_end_ms = ms_since(t0);
        record(posted);
        record(audio);
        metrics.record_stage({Stage::end_to_end, cycle.end_to_end_ms, wall_ms()});

        auto tx = Api::expect(api.get("/api/v1/posts/" + id + "/tx?lang=" + std::string(lane.dst.code()),
                                      lane.follower.token),
                              200, "tx details");
        metrics.record_cost(TxKind::post, *parse_wei(tx["post"]["cost_wei"].get<std::string>()));
        if (!tx["translation"].is_null()) {
          metrics.record_cost(TxKind::translation, *parse_wei(tx["translation"]["cost_wei"].get<std::string>()));
        }

        auto login = Api::expect(
            api.post_json("/api/v1/login", {{"username", lane.follower.username}, {"password", kPassword}}), 200,
            "login");
        const auto t1 = Steady::now();
        Api::expect(api.get("/api/v1/timeline?limit=20", login["token"].get<std::string>()), 200, "timeline");
        metrics.record_stage({Stage::login_to_timeline, ms_since(t1), wall_ms()});
        result.cycles.push_back(std::move(cycle));
      } catch (const std::exception& e) {
        ++result.failures;
        result.errors.emplace_back(e.what());
      }
    }
  }
  result.report = metrics.report();
  result.samples = metrics.samples();
  return result;
}

std::string reference_table(const BenchResult& result) {
  auto stat = [&](Stage s) -> const StageStats* {
    auto it = result.report.stages.find(s);
    return it == result.report.stages.end() ? nullptr : &it->second;
  };
  auto ms = [](const StageStats* s, double StageStats::*field) {
    if (!s) return std::string("n/a");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f ms", s->*field);
    return std::string(buf);
  };
  char ref_latency[32], ref_tx[32];
  std::snprintf(ref_latency, sizeof ref_latency, "%.0f ms", kReferenceLatencyMs);
  std::snprintf(ref_tx, sizeof ref_tx, "%.0f ms", kReferenceTxMs);

  std::string cost = "n/a";
  if (auto it = result.report.costs.find(TxKind::post); it != result.report.costs.end()) {
    cost = wei_to_eth(it->second.mean_cost_wei) + " ETH";
  }

  std::ostringstream out;
  out << "metric                     measured        reference (reference only)\n";
  auto row = [&](const char* name, const std::string& ours, const std::string& ref) {
    char line[128];
    std::snprintf(line, sizeof line, "%-26s %-15s %s\n", name, ours.c_str(), ref.c_str());
    out << line;
  };
  row("end_to_end p50", ms(stat(Stage::end_to_end), &StageStats::p50_ms), ref_latency);
  row("end_to_end p95", ms(stat(Stage::end_to_end), &StageStats::p95_ms), ref_latency);
  row("ledger_commit p95", ms(stat(Stage::ledger_commit), &StageStats::p95_ms), ref_tx);
  row("login_to_timeline p95", ms(stat(Stage::login_to_timeline), &StageStats::p95_ms), "-");
  row("mean post cost", cost, std::string(kReferenceCostEth) + " ETH");
  out << "failures: " << result.failures << "\n";
  return out.str();
}

}  // namespace vnode
