#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "ragmt/analysis.hpp"
#include "ragmt/chat_client.hpp"
#include "../support/temp_dir.hpp"
#include "ragmt/error.hpp"
#include "ragmt/generation.hpp"
#include "ragmt/http_service.hpp"
#include "ragmt/retrieval.hpp"
#include "ragmt/workbench.hpp"

using namespace ragmt;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

/// OpenAI-compatible stand-in. The first `failures` requests answer
/// `fail_status`; later ones succeed.
class FakeOpenAi {
 public:
  FakeOpenAi() {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      last_body_ = json::parse(req.body);
      last_auth_ = req.get_header_value("Authorization");
      if (fail(res)) return;
      const std::string prompt = last_body_["messages"][0]["content"];
      std::string answer = reply;
      if (answer.empty()) answer = prompt.find("ANSWER") != std::string::npos ? "ANSWER: OUTER" : "译文";
      res.set_content(json{{"choices", {{{"message", {{"role", "assistant"}, {"content", answer}}}}}}}.dump(),
                      "application/json");
    });
    server_.Post("/v1/embeddings", [this](const httplib::Request& req, httplib::Response& res) {
      last_body_ = json::parse(req.body);
      if (fail(res)) return;
      res.set_content(json{{"data", {{{"embedding", std::vector<double>(dim, 0.5)}}}}}.dump(),
                      "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeOpenAi() {
    server_.stop();
    thread_.join();
  }

  EndpointConfig endpoint(const std::string& model) const {
    EndpointConfig c;
    c.base_url = "http://127.0.0.1:" + std::to_string(port_) + "/v1";
    c.model = model;
    c.api_key_env = "RAGMT_TEST_FAKE_KEY";
    c.timeout_seconds = 5;
    return c;
  }

  int requests() const { return requests_.load(); }
  const json& last_body() const { return last_body_; }
  const std::string& last_auth() const { return last_auth_; }

  std::atomic<int> failures{0};
  int fail_status = 503;
  std::string reply;
  std::size_t dim = 4;

 private:
  bool fail(httplib::Response& res) {
    ++requests_;
    if (failures.load() > 0) {
      --failures;
      res.status = fail_status;
      res.set_content("{\"error\":\"busy\"}", "application/json");
      return true;
    }
    return false;
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> requests_{0};
  json last_body_;
  std::string last_auth_;
};

}  // namespace

TEST(ChatClientTest, CompletionSendsModelParamsAndKey) {
  FakeOpenAi fake;
  ::setenv("RAGMT_TEST_FAKE_KEY", "sk-test", 1);
  fake.reply = "  你好  ";
  RemoteGenerator gen(fake.endpoint("gpt-4o"), DecodingParams{});
  EXPECT_EQ(gen.generate("hello"), "  你好  ");
  EXPECT_EQ(fake.last_body().at("model"), "gpt-4o");
  EXPECT_EQ(fake.last_body().at("messages")[0].at("role"), "user");
  EXPECT_TRUE(fake.last_body().contains("temperature"));
  EXPECT_EQ(fake.last_body().at("seed"), 0);
  EXPECT_EQ(fake.last_auth(), "Bearer sk-test");
  ::unsetenv("RAGMT_TEST_FAKE_KEY");

  DecodingParams unseeded;
  unseeded.seed = std::nullopt;
  RemoteGenerator plain(fake.endpoint("gpt-4o"), unseeded);
  plain.generate("hello");
  EXPECT_FALSE(fake.last_body().contains("seed"));
  EXPECT_TRUE(fake.last_auth().empty());
}

TEST(ChatClientTest, RetriesServerErrorsThenSucceeds) {
  FakeOpenAi fake;
  fake.failures = 2;
  RemoteGenerator gen(fake.endpoint("gpt-4o"), DecodingParams{});
  const PromptTemplate tpl = PromptTemplate::builtin("enhanced-v1");
  const EnhancedPrompt p = render_bare_prompt("雨が降った", tpl);
  const TranslationRecord r = translate(p, gen, "t1", RetryPolicy{3, std::chrono::milliseconds(1)});
  EXPECT_EQ(r.output_zh, "译文");
  EXPECT_EQ(r.attempt_count, 3);
  EXPECT_EQ(fake.requests(), 3);
}

TEST(ChatClientTest, RateLimitExhaustsRetries) {
  FakeOpenAi fake;
  fake.failures = 100;
  fake.fail_status = 429;
  RemoteGenerator gen(fake.endpoint("gpt-4o"), DecodingParams{});
  const EnhancedPrompt p = render_bare_prompt("雨が降った", PromptTemplate::builtin("enhanced-v1"));
  try {
    translate(p, gen, "t1", RetryPolicy{2, std::chrono::milliseconds(1)});
    FAIL() << "expected RetriesExhausted";
  } catch (const RetriesExhausted& e) {
    EXPECT_EQ(e.attempts().size(), 3u);
  }
  EXPECT_EQ(fake.requests(), 3);
}

TEST(ChatClientTest, ClientErrorsAreNotRetried) {
  FakeOpenAi fake;
  fake.failures = 100;
  fake.fail_status = 400;
  RemoteGenerator gen(fake.endpoint("gpt-4o"), DecodingParams{});
  const EnhancedPrompt p = render_bare_prompt("雨が降った", PromptTemplate::builtin("enhanced-v1"));
  try {
    translate(p, gen, "t1", RetryPolicy{3, std::chrono::milliseconds(1)});
    FAIL() << "expected RetriesExhausted";
  } catch (const RetriesExhausted& e) {
    EXPECT_EQ(e.attempts().size(), 1u);
  }
  EXPECT_EQ(fake.requests(), 1);
}

TEST(ChatClientTest, UnreachableEndpointIsRetriable) {
  EndpointConfig c;
  c.base_url = "http://127.0.0.1:1/v1";
  c.model = "m";
  c.timeout_seconds = 1;
  ChatClient client(c);
  try {
    client.complete("x", json::object());
    FAIL() << "expected TransportError";
  } catch (const TransportError& e) {
    EXPECT_TRUE(e.retriable());
  }
}

TEST(RemoteJudgeTest, ParsesAnswerFromEndpoint) {
  FakeOpenAi fake;
  RemoteJudge judge(fake.endpoint("gpt-4o"), json{{"temperature", 0.0}});
  const NmccJudgment j = classify_nmcc("秋刀魚を焼く匂いが漂ってきた", judge, AnalysisPolicy{});
  EXPECT_EQ(j.type, NmccType::Outer);
  EXPECT_DOUBLE_EQ(fake.last_body().at("temperature").get<double>(), 0.0);
}

TEST(RemoteEncoderTest, EmbedsAndChecksDimension) {
  FakeOpenAi fake;
  RemoteEncoder enc(fake.endpoint("text-embedding-ada-002"), 4);
  EmbeddingCache cache;
  const Embedding e = embed("雨", enc, cache, RetryPolicy{0, {}});
  EXPECT_EQ(e.vector.size(), 4u);
  EXPECT_EQ(fake.last_body().at("input"), "雨");
  embed("雨", enc, cache, RetryPolicy{0, {}});
  EXPECT_EQ(fake.requests(), 1);

  fake.dim = 3;
  EXPECT_THROW(embed("雪", enc, cache, RetryPolicy{0, {}}), DimensionMismatch);
}

namespace {

class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = ragmt::testing::scratch_dir("ragmt_http");
    WorkbenchContext ctx;
    ctx.backends = make_backends(ctx.config);
    ctx.kb = load_pairs(fs::path(RAGMT_GOLDEN_DIR) / "fixture_kb.jsonl", CorpusFormat::Jsonl);
    wb_ = std::make_unique<Workbench>(std::move(ctx), dir_ / "sessions");
    svc_ = std::make_unique<HttpService>(*wb_);
    port_ = svc_->bind("127.0.0.1", 0);
    thread_ = std::thread([this] { svc_->listen(); });
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    for (int i = 0; i < 200 && !client_->Get("/kb/status"); ++i) {
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
  }
  void TearDown() override {
    svc_->stop();
    thread_.join();
    fs::remove_all(dir_);
  }

  std::pair<int, json> post(const std::string& path, const json& body = json::object()) {
    auto res = client_->Post(path, body.dump(), "application/json");
    if (!res) return {0, nullptr};
    return {res->status, json::parse(res->body)};
  }
  std::pair<int, json> get(const std::string& path) {
    auto res = client_->Get(path);
    if (!res) return {0, nullptr};
    return {res->status, json::parse(res->body)};
  }

  fs::path dir_;
  std::unique_ptr<Workbench> wb_;
  std::unique_ptr<HttpService> svc_;
  std::unique_ptr<httplib::Client> client_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace

TEST_F(ServiceTest, FullSessionOverHttp) {
  auto [st, s] = post("/sessions", {{"sl", "駅前で花を売っている女性に道を尋ねた"}});
  ASSERT_EQ(st, 201);
  const std::string id = s.at("session_id");
  const std::string base = "/sessions/" + id;

  EXPECT_EQ(post(base + "/analyze").first, 200);
  auto [rst, r] = post(base + "/retrieve", {{"k", 3}});
  ASSERT_EQ(rst, 200);
  EXPECT_EQ(r.at("hits").size(), 3u);

  auto [cst, c] = post(base + "/compose",
                       {{"selections", {{{"rank", 2}, {"selected", false}, {"justification", ""}}}},
                        {"note", "v1"}});
  ASSERT_EQ(cst, 200);
  EXPECT_EQ(c.at("prompt_versions").size(), 1u);

  EXPECT_EQ(post(base + "/generate").first, 200);
  EXPECT_EQ(post(base + "/postedit", {{"text", "我向站前卖花的女人问了路"}}).first, 200);
  auto [sst, sc] = post(base + "/score", {{"reference", "我向站前卖花的女人问了路"}});
  ASSERT_EQ(sst, 200);
  EXPECT_DOUBLE_EQ(sc.at("scores").back().at("bleu").at("score").get<double>(), 100.0);

  auto [ast, ae] = post(base + "/archive");
  EXPECT_EQ(ast, 409);
  EXPECT_EQ(ae.at("code"), "unjustified_hits");
  for (int rank : {1, 3}) {
    EXPECT_EQ(post(base + "/select", {{"rank", rank}, {"selected", true}, {"justification", "ok"}}).first, 200);
  }
  EXPECT_EQ(post(base + "/archive").first, 200);

  auto [gst, g] = get(base);
  EXPECT_EQ(gst, 200);
  EXPECT_EQ(g.at("status"), "archived");
  auto [est, ex] = get(base + "/export?format=json");
  EXPECT_EQ(est, 200);
  EXPECT_EQ(ex.at("final_text"), "我向站前卖花的女人问了路");
  auto md = client_->Get(base + "/export?format=md");
  ASSERT_TRUE(md);
  EXPECT_NE(md->body.find("# Worksheet " + id), std::string::npos);

  auto nd = client_->Post("/kb/candidates", json{{"session_ids", {id}}}.dump(), "application/json");
  ASSERT_TRUE(nd);
  EXPECT_EQ(nd->status, 200);
  const json line = json::parse(nd->body.substr(0, nd->body.find('\n')));
  EXPECT_EQ(line.at("id"), "wb-" + id);

  auto [lst, l] = get("/sessions");
  EXPECT_EQ(lst, 200);
  EXPECT_EQ(l.at("sessions"), json::array({id}));
}

TEST_F(ServiceTest, ErrorResponses) {
  auto [st, s] = post("/sessions", {{"sl", "雨が降った"}});
  const std::string base = "/sessions/" + s.at("session_id").get<std::string>();

  auto [gst, g] = post(base + "/generate");
  EXPECT_EQ(gst, 409);
  EXPECT_EQ(g.at("code"), "missing_prerequisite");
  EXPECT_EQ(g.at("missing_prerequisite"), "compose");

  EXPECT_EQ(get("/sessions/nope").first, 404);
  EXPECT_EQ(post("/sessions", {{"text", "x"}}).first, 400);
  EXPECT_EQ(post("/sessions", {{"sl", 3}}).first, 400);
  auto bad = client_->Post("/sessions", "{not json", "application/json");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 400);
  EXPECT_EQ(json::parse(bad->body).at("code"), "invalid_json");
  EXPECT_EQ(get(base + "/export?format=pdf").first, 400);

  auto [nst, n] = get("/no/such/route");
  EXPECT_EQ(nst, 404);
  EXPECT_EQ(n.at("code"), "not_found");

  auto empty = client_->Post("/kb/candidates", "{}", "application/json");
  ASSERT_TRUE(empty);
  EXPECT_EQ(empty->status, 200);
  EXPECT_TRUE(empty->body.empty());
  auto open = client_->Post("/kb/candidates", json{{"session_ids", {s.at("session_id")}}}.dump(), "application/json");
  ASSERT_TRUE(open);
  EXPECT_EQ(open->status, 409);

  auto [kst, k] = get("/kb/status");
  EXPECT_EQ(kst, 200);
  EXPECT_EQ(k.at("size"), 5);
}
