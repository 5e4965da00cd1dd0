#include <gtest/gtest.h>

#include "support.hpp"
#include "vnode/api.hpp"
#include "vnode/codec.hpp"
#include "vnode/error.hpp"

using namespace vnode;
using testing_support::Http;
using testing_support::InProcessServer;
using testing_support::TempDir;
using testing_support::voice_wav;
using json = nlohmann::json;

namespace {

struct ApiFixture : ::testing::Test {
  TempDir dir;
  InProcessServer server{testing_support::test_config(dir.path())};
  Http http{server.base_url()};
};

void expect_error(const testing_support::HttpReply& r, int status, const std::string& code) {
  EXPECT_EQ(r.status, status) << r.body;
  ASSERT_FALSE(r.body.empty());
  auto j = r.j();
  EXPECT_EQ(j.value("error", ""), code) << r.body;
  EXPECT_TRUE(j.contains("message"));
}

}  // namespace

TEST(HttpStatus, Mapping) {
  EXPECT_EQ(http_status(Errc::invalid_argument), 400);
  EXPECT_EQ(http_status(Errc::bad_cursor), 400);
  EXPECT_EQ(http_status(Errc::unauthorized), 401);
  EXPECT_EQ(http_status(Errc::invalid_credentials), 401);
  EXPECT_EQ(http_status(Errc::unknown_post), 404);
  EXPECT_EQ(http_status(Errc::username_taken), 409);
  EXPECT_EQ(http_status(Errc::too_large), 413);
  EXPECT_EQ(http_status(Errc::too_long), 413);
  EXPECT_EQ(http_status(Errc::not_riff), 422);
  EXPECT_EQ(http_status(Errc::unsupported_language), 422);
  EXPECT_EQ(http_status(Errc::engine_unavailable), 503);
  EXPECT_EQ(http_status(Errc::storage_failure), 500);
}

TEST_F(ApiFixture, HealthOnFreshNode) {
  auto r = http.get("/api/v1/health");
  ASSERT_EQ(r.status, 200);
  auto j = r.j();
  EXPECT_EQ(j["mode"], "normal");
  EXPECT_EQ(j["height"], 1);
  EXPECT_EQ(j["engine"], "mock-1");
  EXPECT_EQ(r.body.back(), '\n');
}

TEST_F(ApiFixture, Languages) {
  auto j = http.get("/api/v1/languages").j();
  ASSERT_EQ(j.size(), 36u);
  bool has_eng = false;
  for (const auto& l : j) has_eng |= l["code"] == "eng";
  EXPECT_TRUE(has_eng);
}

TEST_F(ApiFixture, RegisterLoginProfile) {
  auto r = http.post_json("/api/v1/register", {{"username", "amina"}, {"password", "correct horse"}, {"default_lang", "swh"}});
  ASSERT_EQ(r.status, 201) << r.body;
  EXPECT_EQ(r.j()["default_lang"], "swh");
  EXPECT_FALSE(r.j().contains("password_record"));

  expect_error(http.post_json("/api/v1/register", {{"username", "amina"}, {"password", "correct horse"}}), 409,
               "username_taken");
  expect_error(http.post_json("/api/v1/register", {{"username", "x"}, {"password", "correct horse"}}), 400,
               "invalid_username");
  expect_error(http.post_json("/api/v1/register", {{"username", "shorty"}, {"password", "pw"}}), 400, "weak_password");
  expect_error(http.post_json("/api/v1/register", {{"username", "klingon"}, {"password", "correct horse"},
                                                   {"default_lang", "tlh"}}),
               422, "unsupported_language");
  expect_error(http.post_json("/api/v1/register", {{"username", 5}}), 400, "invalid_argument");

  expect_error(http.post_json("/api/v1/login", {{"username", "amina"}, {"password", "wrong horse"}}), 401,
               "invalid_credentials");
  auto login = http.post_json("/api/v1/login", {{"username", "amina"}, {"password", "correct horse"}});
  ASSERT_EQ(login.status, 200);
  const std::string token = login.j()["token"];

  EXPECT_EQ(http.get("/api/v1/profile", token).j()["username"], "amina");
  auto put = http.put_json("/api/v1/profile", {{"default_lang", "fra"}}, token);
  EXPECT_EQ(put.j()["default_lang"], "fra");
  expect_error(http.get("/api/v1/profile"), 401, "unauthorized");
  expect_error(http.get("/api/v1/profile", "forged-token"), 401, "unauthorized");
}

TEST_F(ApiFixture, ProfilePicture) {
  auto token = testing_support::enroll(http, "painter", "eng");
  expect_error(http.get("/api/v1/profile/picture", token), 404, "not_found");
  const std::string png("\x89PNG\r\n\x1a\n\0\0\0\x0dIHDR", 16);
  auto r = http.put_raw("/api/v1/profile/picture", png, "image/png", token);
  ASSERT_EQ(r.status, 200) << r.body;
  EXPECT_TRUE(r.j()["picture"].is_string());
  auto got = http.get("/api/v1/profile/picture", token);
  EXPECT_EQ(got.body, png);
  EXPECT_EQ(got.headers["Content-Type"], "image/png");
  expect_error(http.put_raw("/api/v1/profile/picture", "plain text", "text/plain", token), 422, "unsupported_encoding");
}

TEST_F(ApiFixture, FollowRules) {
  auto a = testing_support::enroll(http, "alpha", "eng");
  testing_support::enroll(http, "bravo", "eng");
  auto r = http.post_json("/api/v1/users/bravo/follow", json::object(), a);
  ASSERT_EQ(r.status, 200) << r.body;
  EXPECT_EQ(r.j()["followee"], "bravo");
  expect_error(http.post_json("/api/v1/users/alpha/follow", json::object(), a), 400, "self_follow");
  expect_error(http.post_json("/api/v1/users/nobody/follow", json::object(), a), 404, "unknown_user");
  EXPECT_EQ(http.del("/api/v1/users/bravo/follow", a).j()["removed"], true);
  EXPECT_EQ(http.del("/api/v1/users/bravo/follow", a).j()["removed"], false);
}

TEST_F(ApiFixture, PostTimelineAudioTransactions) {
  auto author = testing_support::enroll(http, "author", "eng");
  auto viewer = testing_support::enroll(http, "viewer", "fra");
  http.post_json("/api/v1/users/author/follow", json::object(), viewer);

  auto posted = http.post_audio(author, voice_wav("water is safe"));
  ASSERT_EQ(posted.status, 201) << posted.body;
  EXPECT_NE(posted.headers["Server-Timing"].find("asr;dur="), std::string::npos);
  EXPECT_NE(posted.headers["Server-Timing"].find("ledger_commit;dur="), std::string::npos);
  const std::string id = posted.j()["post_id"];
  EXPECT_EQ(posted.j()["transcript"], "water is safe");
  EXPECT_EQ(posted.j()["tx"]["block_height"], 3);  // genesis, two registrations

  auto tl = http.get("/api/v1/timeline", viewer);
  ASSERT_EQ(tl.status, 200);
  auto items = tl.j()["items"];
  ASSERT_EQ(items.size(), 1u);
  EXPECT_EQ(items[0]["text"], "[fra] water is safe");
  EXPECT_EQ(items[0]["audio_source"], "translated");
  EXPECT_EQ(items[0]["audio_url"], "/api/v1/posts/" + id + "/audio?lang=fra");
  EXPECT_TRUE(tl.j()["next_cursor"].is_null());

  auto audio = http.get("/api/v1/posts/" + id + "/audio", viewer);
  ASSERT_EQ(audio.status, 200);
  EXPECT_EQ(audio.headers["Content-Type"], "audio/wav");
  EXPECT_EQ(audio.headers["X-Audio-Lang"], "fra");
  EXPECT_EQ(parse_wav(to_bytes(audio.body)).transcript(), "[fra] water is safe");

  auto original = http.get("/api/v1/posts/" + id + "/audio?lang=eng", viewer);
  EXPECT_EQ(to_bytes(original.body), voice_wav("water is safe"));

  auto transcript = http.get("/api/v1/posts/" + id + "/transcript?lang=eng", viewer);
  EXPECT_EQ(transcript.j()["text"], "water is safe");

  auto tx = http.get("/api/v1/posts/" + id + "/tx", viewer).j();
  EXPECT_EQ(tx["post"]["kind"], "post");
  EXPECT_EQ(tx["translation"]["kind"], "translation");
  EXPECT_EQ(tx["translation"]["text"], "[fra] water is safe");
  EXPECT_TRUE(tx["post"]["cost_wei"].is_string());

  auto ledger_tx = http.get("/api/v1/ledger/tx/" + tx["post"]["tx_hash"].get<std::string>());
  ASSERT_EQ(ledger_tx.status, 200);
  EXPECT_EQ(ledger_tx.j()["transaction"]["kind"], "post");

  auto block = http.get("/api/v1/ledger/blocks/2");
  ASSERT_EQ(block.status, 200);
  EXPECT_EQ(block.body, block_json(server.node().ledger().block(2)));
  expect_error(http.get("/api/v1/ledger/blocks/99"), 404, "not_found");
  expect_error(http.get("/api/v1/ledger/blocks/abc"), 400, "invalid_argument");
  expect_error(http.get("/api/v1/ledger/tx/zz"), 400, "invalid_argument");
  expect_error(http.get("/api/v1/ledger/tx/" + std::string(64, '0')), 404, "not_found");

  auto verify = http.get("/api/v1/ledger/verify").j();
  EXPECT_EQ(verify["ok"], true);
  EXPECT_EQ(verify["blocks_checked"], server.node().ledger().block_count());
  expect_error(http.get("/api/v1/ledger/verify?from=5&to=2"), 400, "range_out_of_bounds");

  auto metrics = http.get("/api/v1/metrics").j();
  EXPECT_TRUE(metrics["stages"].contains("asr"));
  EXPECT_TRUE(metrics["costs"].contains("post"));
}

TEST_F(ApiFixture, RawBodyPostWithLangQuery) {
  auto author = testing_support::enroll(http, "author", "eng");
  auto r = http.post_raw("/api/v1/posts?lang=swh", to_string(voice_wav("jambo")), "audio/wav", author);
  ASSERT_EQ(r.status, 201) << r.body;
  EXPECT_EQ(r.j()["lang"], "swh");
  EXPECT_EQ(r.j()["transcript"], "jambo");
}

TEST_F(ApiFixture, PostErrors) {
  auto author = testing_support::enroll(http, "author", "eng");
  expect_error(http.post_audio("", voice_wav("x")), 401, "unauthorized");
  expect_error(http.post_audio(author, to_bytes(std::string("not audio at all"))), 422, "not_riff");
  expect_error(http.post_audio(author, voice_wav("x"), "zzz"), 422, "unsupported_language");
  WavAudio silent = make_voice_clip("x", 100);
  silent.extra_chunks.clear();
  expect_error(http.post_audio(author, write_wav(silent)), 422, "no_transcript_chunk");
  expect_error(http.post_audio(author, voice_wav("x", 121'000)), 413, "too_long");
  expect_error(http.get("/api/v1/posts/" + std::string(32, 'a') + "/audio", author), 404, "unknown_post");
  expect_error(http.get("/api/v1/timeline?cursor=bogus", author), 400, "bad_cursor");
  expect_error(http.get("/api/v1/timeline?limit=0", author), 400, "invalid_argument");
  expect_error(http.get("/api/v1/timeline?limit=51", author), 400, "invalid_argument");
  expect_error(http.get("/api/v1/no/such/route"), 404, "not_found");
  EXPECT_EQ(server.node().ledger().block_count(), 2u);  // genesis and the registration
}

TEST_F(ApiFixture, OversizedUploadsGet413) {
  auto author = testing_support::enroll(http, "author", "eng");
  // Over the WAV limit but inside the request allowance: rejected by the parser.
  std::string big = to_string(voice_wav("big", 100));
  big.resize((10u << 20) + 1024, '\0');
  expect_error(http.post_audio(author, to_bytes(big)), 413, "too_large");
  // Over the request allowance: rejected before the body is read.
  std::string huge((11u << 20), 'x');
  auto r = http.post_audio(author, to_bytes(huge));
  EXPECT_EQ(r.status, 413) << r.body;
}

TEST(ApiEngine, UnavailableEngineGives503) {
  TempDir dir;
  auto cfg = testing_support::test_config(dir.path());
  cfg.engine = EngineSpec{true, testing_support::engine_mock_binary(), {"--fault-error", "model_crashed"}};
  InProcessServer server(cfg);
  Http http(server.base_url());
  auto token = testing_support::enroll(http, "author", "eng");
  expect_error(http.post_audio(token, voice_wav("hello")), 503, "engine_unavailable");
}
