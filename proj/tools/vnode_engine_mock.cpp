// External speech engine speaking the node's wire protocol, backed by the
// deterministic mock rules. Useful for exercising the external-engine path
// without ML models. The --fault-* flags exist for integration tests.

#include <unistd.h>

#include <chrono>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "vnode/crypto.hpp"
#include "vnode/engine.hpp"
#include "vnode/error.hpp"
#include "vnode/media.hpp"

using nlohmann::json;

int main(int argc, char** argv) {
  CLI::App app{"vnode-engine-mock: wire-protocol speech engine with mock behaviour"};
  std::string engine_id = "mock-ext-1";
  std::vector<std::string> languages;
  unsigned delay_ms = 0;
  bool fault_bad_handshake = false;
  bool fault_hang = false;
  int fault_exit_after = -1;
  std::string fault_error;
  app.add_option("--engine-id", engine_id, "engine_id announced in the handshake");
  app.add_option("--languages", languages, "restrict announced languages (default: all)");
  app.add_option("--delay-ms", delay_ms, "sleep before each answer");
  app.add_flag("--fault-bad-handshake", fault_bad_handshake, "send a malformed handshake");
  app.add_flag("--fault-hang", fault_hang, "never answer requests");
  app.add_option("--fault-exit-after", fault_exit_after, "exit after answering N requests");
  app.add_option("--fault-error", fault_error, "answer every request with this error code");
  CLI11_PARSE(app, argc, argv);

  vnode::crypto_init();
  vnode::MockEngine engine(engine_id);
  const int in = STDIN_FILENO;
  const int out = STDOUT_FILENO;

  if (fault_bad_handshake) {
    vnode::wire::write_message(out, "{not json");
    std::this_thread::sleep_for(std::chrono::seconds(3600));
    return 0;
  }
  json langs = json::array();
  if (languages.empty()) {
    for (auto l : vnode::supported_languages()) langs.push_back(l.code());
  } else {
    for (const auto& l : languages) langs.push_back(l);
  }
  vnode::wire::write_message(
      out, json{{"engine_id", engine_id}, {"capabilities", {"asr", "t2tt", "s2st"}}, {"languages", langs}}.dump());

  int answered = 0;
  for (;;) {
    std::optional<std::string> msg;
    try {
      msg = vnode::wire::read_message(in, std::chrono::steady_clock::time_point::max());
    } catch (const vnode::Error& e) {
      std::cerr << "engine: " << e.what() << "\n";
      return 1;
    }
    if (!msg) return 0;
    if (fault_hang) continue;
    if (delay_ms) std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));

    json reply;
    try {
      const json req = json::parse(*msg);
      reply["id"] = req.at("id");
      if (!fault_error.empty()) throw vnode::Error(vnode::Errc::engine_unavailable, fault_error);
      const auto op = req.at("op").get<std::string>();
      const auto src = vnode::resolve_language(req.at("src").get<std::string>());
      const auto dst = vnode::resolve_language(req.at("dst").get<std::string>());
      auto audio_in = [&] {
        auto bytes = vnode::base64_decode(req.at("audio_b64").get<std::string>());
        if (!bytes) throw vnode::Error(vnode::Errc::invalid_argument, "bad base64");
        return vnode::parse_wav(*bytes);
      };
      if (op == "asr") {
        auto r = engine.asr(audio_in(), src);
        reply["text"] = r.text;
        reply["confidence"] = r.confidence;
      } else if (op == "t2tt") {
        reply["text"] = engine.t2tt(req.at("text").get<std::string>(), src, dst);
      } else if (op == "s2st") {
        reply["audio_b64"] = vnode::base64_encode(vnode::write_wav(engine.s2st(audio_in(), src, dst)));
      } else {
        throw vnode::Error(vnode::Errc::invalid_argument, "unknown op " + op);
      }
      reply["ok"] = true;
    } catch (const vnode::Error& e) {
      reply["ok"] = false;
      reply["error"] = fault_error.empty() ? std::string(vnode::errc_name(e.code())) : fault_error;
      reply["message"] = e.what();
    } catch (const json::exception& e) {
      reply["ok"] = false;
      reply["error"] = "invalid_argument";
      reply["message"] = e.what();
    }
    vnode::wire::write_message(out, reply.dump());
    if (fault_exit_after >= 0 && ++answered >= fault_exit_after) return 0;
  }
}
