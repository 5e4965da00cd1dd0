#include <signal.h>

#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include "vnode/api.hpp"
#include "vnode/bench.hpp"
#include "vnode/codec.hpp"
#include "vnode/config.hpp"
#include "vnode/crypto.hpp"
#include "vnode/error.hpp"
#include "vnode/ledger.hpp"
#include "vnode/node.hpp"
#include "vnode/storage.hpp"

namespace {

using nlohmann::json;

struct OperationalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw OperationalError("cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

vnode::NodeConfig base_config(const std::string& config_file, const std::string& data_dir) {
  auto cfg = vnode::load_config(config_file.empty() ? std::nullopt
                                                    : std::optional<std::filesystem::path>(config_file));
  if (!data_dir.empty()) cfg.data_dir = data_dir;
  return cfg;
}

std::filesystem::path chain_path(const vnode::NodeConfig& cfg) { return cfg.data_dir / "chain.vdl"; }

// --- node-side commands ----------------------------------------------------

int cmd_init(const std::string& config_file, const std::string& data_dir) {
  auto cfg = base_config(config_file, data_dir);
  vnode::StoreOptions options;
  options.ledger.gas.gas_price_wei = cfg.gas_price_wei;
  auto store = vnode::init_store(cfg.data_dir, options);
  json out{{"data_dir", std::filesystem::absolute(cfg.data_dir).string()},
           {"height", store->ledger().block_count()},
           {"genesis_hash", vnode::to_hex(vnode::genesis_block().hash())},
           {"translator_address", vnode::derive_address(store->translator().public_key()).to_string()}};
  std::cout << out.dump() << "\n";
  std::cerr << "initialized " << cfg.data_dir.string() << "\n";
  return 0;
}

int cmd_serve(const std::string& config_file, const std::string& data_dir, const std::string& bind) {
  auto cfg = base_config(config_file, data_dir);
  if (!bind.empty()) cfg = vnode::apply_config(cfg, {{"bind_addr", bind}});
  cfg.validate();

  // Handle SIGINT/SIGTERM on this thread only; every thread started below
  // inherits the blocked mask.
  sigset_t stop_signals;
  sigemptyset(&stop_signals);
  sigaddset(&stop_signals, SIGINT);
  sigaddset(&stop_signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);
  signal(SIGPIPE, SIG_IGN);

  auto node = vnode::Node::open(cfg);
  vnode::ApiServer server(*node);
  const auto port = server.bind(cfg.bind_host, cfg.bind_port);
  std::cout << json{{"listening", cfg.bind_host + ":" + std::to_string(port)},
                    {"mode", vnode::mode_name(cfg.mode)},
                    {"height", node->ledger().block_count()}}
                   .dump()
            << std::endl;

  std::thread worker([&] { server.run(); });
  int sig = 0;
  sigwait(&stop_signals, &sig);
  std::cerr << "vnode: signal " << sig << ", shutting down\n";
  server.stop();
  worker.join();
  return 0;
}

int cmd_ledger_verify(const std::string& config_file, const std::string& data_dir, std::uint64_t from,
                      std::optional<std::uint64_t> to) {
  auto cfg = base_config(config_file, data_dir);
  const auto path = chain_path(cfg);
  if (!std::filesystem::exists(path)) throw OperationalError("no chain file at " + path.string());
  auto report = vnode::verify_chain_file(path, from, to);
  std::cout << vnode::verification_json(report);
  if (report.ok) {
    std::cerr << "ok, " << report.blocks_checked << (report.blocks_checked == 1 ? " block" : " blocks")
              << " checked\n";
    return 0;
  }
  std::cerr << "FAILED at height " << report.first_error->height << ": " << report.first_error->reason << "\n";
  return 1;
}

int cmd_ledger_show(const std::string& config_file, const std::string& data_dir, std::uint64_t height) {
  auto cfg = base_config(config_file, data_dir);
  const auto bytes = read_file(chain_path(cfg).string());
  auto scan = vnode::scan_chain(vnode::as_bytes(bytes));
  if (height >= scan.blocks.size()) {
    throw OperationalError("no block at height " + std::to_string(height) + " (chain has " +
                           std::to_string(scan.blocks.size()) + " readable blocks)");
  }
  std::cout << vnode::block_json(scan.blocks[height]);
  return 0;
}

// --- client commands -------------------------------------------------------

struct ClientOpts {
  std::string server = "http://127.0.0.1:8080";
  std::string token;
};

httplib::Headers auth(const ClientOpts& o) {
  if (o.token.empty()) return {};
  return {{"Authorization", "Bearer " + o.token}};
}

int emit(const httplib::Result& r) {
  if (!r) throw OperationalError("request failed: " + httplib::to_string(r.error()));
  if (r->status >= 400) {
    std::cerr << "HTTP " << r->status << ": " << r->body;
    if (!r->body.empty() && r->body.back() != '\n') std::cerr << "\n";
    return 1;
  }
  std::cout << r->body;
  if (!r->body.empty() && r->body.back() != '\n') std::cout << "\n";
  return 0;
}

std::string query_string(std::initializer_list<std::pair<const char*, std::string>> params) {
  std::string q;
  for (const auto& [k, v] : params) {
    if (v.empty()) continue;
    q += (q.empty() ? "?" : "&") + std::string(k) + "=" + httplib::detail::encode_url(v);
  }
  return q;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vnode: multilingual voice social network node"};
  app.require_subcommand(1);
  std::string config_file;
  std::string data_dir;
  app.add_option("--config", config_file, "key=value config file (VNODE_* variables override it)")
      ->check(CLI::ExistingFile);

  auto* init = app.add_subcommand("init", "create a data directory with its genesis block");
  init->add_option("--data-dir", data_dir, "data directory")->envname("VNODE_DATA_DIR");

  std::string bind;
  auto* serve = app.add_subcommand("serve", "run the node's HTTP service");
  serve->add_option("--data-dir", data_dir, "data directory");
  serve->add_option("--bind", bind, "host:port, overrides bind_addr (port 0 picks one)");

  auto* ledger = app.add_subcommand("ledger", "inspect the chain file");
  ledger->require_subcommand(1);
  std::uint64_t from = 0;
  std::optional<std::uint64_t> to;
  std::uint64_t height = 0;
  auto* verify = ledger->add_subcommand("verify", "re-verify hashes, links and signatures; exit 0 iff intact");
  verify->add_option("--data-dir", data_dir, "data directory");
  verify->add_option("--from", from, "first height (default 0)");
  verify->add_option("--to", to, "last height (default: last block)");
  auto* show = ledger->add_subcommand("show", "print one block as JSON");
  show->add_option("--data-dir", data_dir, "data directory");
  show->add_option("--height", height, "block height")->required();

  ClientOpts co;
  auto* client = app.add_subcommand("client", "talk to a running node");
  client->require_subcommand(1);
  client->add_option("--server", co.server, "base URL")->envname("VNODE_SERVER");
  client->add_option("--token", co.token, "bearer token")->envname("VNODE_TOKEN");
  std::string username, password, lang, user, wav, post_id, cursor, out_file;
  std::size_t limit = 0;
  bool unfollow = false;
  auto* c_register = client->add_subcommand("register", "create an account");
  c_register->add_option("--username", username)->required();
  c_register->add_option("--password", password)->required();
  c_register->add_option("--lang", lang, "default language code");
  auto* c_login = client->add_subcommand("login", "log in and print the session token");
  c_login->add_option("--username", username)->required();
  c_login->add_option("--password", password)->required();
  auto* c_follow = client->add_subcommand("follow", "follow (or --unfollow) a user");
  c_follow->add_option("--user", user)->required();
  c_follow->add_flag("--unfollow", unfollow);
  auto* c_post = client->add_subcommand("post", "upload a voice post");
  c_post->add_option("--wav", wav, "WAV file")->required()->check(CLI::ExistingFile);
  c_post->add_option("--lang", lang, "language of the recording");
  auto* c_timeline = client->add_subcommand("timeline", "print feed items");
  c_timeline->add_option("--cursor", cursor);
  c_timeline->add_option("--limit", limit);
  c_timeline->add_option("--lang", lang, "view in this language instead of the profile default");
  auto* c_tx = client->add_subcommand("tx", "print a post's transaction details");
  c_tx->add_option("--post", post_id)->required();
  c_tx->add_option("--lang", lang);
  auto* c_audio = client->add_subcommand("audio", "download a post's audio");
  c_audio->add_option("--post", post_id)->required();
  c_audio->add_option("--lang", lang);
  c_audio->add_option("--out", out_file, "output WAV file")->required();

  vnode::BenchOptions bo;
  std::vector<std::string> pairs;
  std::string dump;
  auto* bench = app.add_subcommand("bench", "drive full post/translate cycles and report stage latencies");
  bench->add_option("--server", bo.server, "base URL")->envname("VNODE_SERVER");
  bench->add_option("--posts", bo.posts, "number of post cycles per language pair");
  bench->add_option("--pair", pairs, "author:follower languages, e.g. eng:fra (repeatable)");
  bench->add_option("--clip-ms", bo.clip_ms, "length of each uploaded clip");
  bench->add_option("--dump", dump, "write raw samples as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << "\n" << app.help();
    return 2;
  }

  try {
    vnode::crypto_init();
    if (*init) return cmd_init(config_file, data_dir);
    if (*serve) return cmd_serve(config_file, data_dir, bind);
    if (*verify) return cmd_ledger_verify(config_file, data_dir, from, to);
    if (*show) return cmd_ledger_show(config_file, data_dir, height);
    if (*bench) {
      for (const auto& p : pairs) bo.pairs.push_back(vnode::parse_lang_pair(p));
      auto result = vnode::run_bench(bo);
      std::cout << vnode::metrics_report_json(result.report);
      std::cerr << vnode::reference_table(result);
      for (const auto& e : result.errors) std::cerr << "error: " << e << "\n";
      if (!dump.empty()) {
        std::ofstream(dump) << vnode::samples_to_csv(result.samples);
      }
      return result.failures == 0 ? 0 : 1;
    }

    httplib::Client http(co.server);
    http.set_read_timeout(std::chrono::seconds(120));
    if (*c_register) {
      json body{{"username", username}, {"password", password}};
      if (!lang.empty()) body["default_lang"] = lang;
      return emit(http.Post("/api/v1/register", body.dump(), "application/json"));
    }
    if (*c_login) {
      return emit(http.Post("/api/v1/login", json{{"username", username}, {"password", password}}.dump(),
                            "application/json"));
    }
    if (*c_follow) {
      const auto path = "/api/v1/users/" + httplib::detail::encode_url(user) + "/follow";
      return emit(unfollow ? http.Delete(path, auth(co)) : http.Post(path, auth(co), "{}", "application/json"));
    }
    if (*c_post) {
      httplib::MultipartFormDataItems items{{"audio", read_file(wav), "post.wav", "audio/wav"}};
      if (!lang.empty()) items.push_back({"lang", lang, "", ""});
      return emit(http.Post("/api/v1/posts", auth(co), items));
    }
    if (*c_timeline) {
      return emit(http.Get("/api/v1/timeline" +
                               query_string({{"cursor", cursor},
                                             {"limit", limit ? std::to_string(limit) : std::string()},
                                             {"lang", lang}}),
                           auth(co)));
    }
    if (*c_tx) {
      return emit(http.Get("/api/v1/posts/" + post_id + "/tx" + query_string({{"lang", lang}}), auth(co)));
    }
    if (*c_audio) {
      auto r = http.Get("/api/v1/posts/" + post_id + "/audio" + query_string({{"lang", lang}}), auth(co));
      if (r && r->status == 200) {
        std::ofstream(out_file, std::ios::binary) << r->body;
        std::cerr << "wrote " << r->body.size() << " bytes to " << out_file << "\n";
        return 0;
      }
      return emit(r);
    }
  } catch (const vnode::Error& e) {
    std::cerr << "error: " << vnode::errc_name(e.code()) << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
