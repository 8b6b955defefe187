// SPDX-License-Identifier: Apache-2.0
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <gtest/gtest.h>

#include <atomic>
#include <mutex>
#include <thread>

#include "ethrev/gateway/gateway.hpp"
#include "ethrev/gateway/http_backend.hpp"

using namespace ethrev::gateway;
using nlohmann::json;

namespace {

// OpenAI-compatible stub on a random localhost port.
class StubServer {
 public:
  StubServer() {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      std::lock_guard lock(mu_);
      last_chat = json::parse(req.body);
      auth = req.get_header_value("Authorization");
      ++chat_hits;
      std::string content = chat_replies.empty() ? "ok" : chat_replies[std::min(chat_hits - 1, chat_replies.size() - 1)];
      if (content == "<500>") {
        res.status = 500;
        return;
      }
      res.set_content(json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}}.dump(),
                      "application/json");
    });
    server_.Post("/v1/embeddings", [](const httplib::Request& req, httplib::Response& res) {
      auto body = json::parse(req.body);
      json data = json::array();
      // Reverse order with explicit indices.
      for (std::size_t i = body["input"].size(); i-- > 0;) {
        data.push_back({{"index", i}, {"embedding", {3.0 * static_cast<double>(i + 1), 4.0}}});
      }
      res.set_content(json{{"data", data}}.dump(), "application/json");
    });
    server_.Post("/v1/rerank", [](const httplib::Request& req, httplib::Response& res) {
      auto body = json::parse(req.body);
      json results = json::array();
      for (std::size_t i = 0; i < body["documents"].size(); ++i) {
        results.push_back({{"index", i}, {"relevance_score", static_cast<double>(i)}});
      }
      res.set_content(json{{"results", results}}.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    thread_.join();
  }
  std::string base() const { return "http://127.0.0.1:" + std::to_string(port_); }

  std::mutex mu_;
  json last_chat;
  std::string auth;
  std::size_t chat_hits = 0;
  std::vector<std::string> chat_replies;

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

Gateway make(const StubServer& s, int retry_cap = 3) {
  EndpointConfig cfg;
  cfg.base_url = s.base();
  cfg.model = "stub-model";
  cfg.api_key = "secret";
  cfg.timeout_seconds = 5;
  GatewayOptions opts;
  opts.retry_cap = retry_cap;
  opts.backoff_base = std::chrono::milliseconds(0);
  return Gateway(std::make_shared<HttpBackend>(cfg), opts);
}

ChatRequest req(std::string text) {
  ChatRequest r;
  r.tag = "t";
  r.messages = {{Role::system, "sys"}, {Role::user, std::move(text)}};
  return r;
}

}  // namespace

TEST(HttpBackend, ChatSendsModelMessagesAndDefaultTemperature) {
  StubServer s;
  s.chat_replies = {"hello there"};
  auto gw = make(s);
  EXPECT_EQ(gw.chat(req("hi")), "hello there");
  EXPECT_EQ(s.last_chat["model"], "stub-model");
  EXPECT_DOUBLE_EQ(s.last_chat["temperature"].get<double>(), 0.1);
  EXPECT_EQ(s.last_chat["messages"][0]["role"], "system");
  EXPECT_EQ(s.last_chat["messages"][1]["content"], "hi");
  EXPECT_EQ(s.auth, "Bearer secret");
  EXPECT_FALSE(s.last_chat.contains("response_format"));
}

TEST(HttpBackend, MalformedJsonThreeTimesIsSchemaViolation) {
  StubServer s;
  s.chat_replies = {"nope", "still nope", "{broken"};
  auto gw = make(s, 3);
  auto r = req("judge");
  r.response_schema = ResponseSchema{"x", {{"status", FieldKind::string}}};
  try {
    gw.chat(r);
    FAIL();
  } catch (const GatewayError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::schema_violation);
  }
  EXPECT_EQ(s.chat_hits, 3u);
  EXPECT_EQ(s.last_chat["response_format"]["type"], "json_object");
}

TEST(HttpBackend, ServerErrorIsRetriedAsTransport) {
  StubServer s;
  s.chat_replies = {"<500>", "recovered"};
  auto gw = make(s, 3);
  EXPECT_EQ(gw.chat(req("hi")), "recovered");
  EXPECT_EQ(s.chat_hits, 2u);
}

TEST(HttpBackend, EmbeddingsHonourIndicesAndAreNormalized) {
  StubServer s;
  auto gw = make(s);
  std::vector<std::string> texts = {"a", "b"};
  auto v = gw.embed(texts);
  ASSERT_EQ(v.size(), 2u);
  EXPECT_NEAR(v[0].values[0], 0.6, 1e-12);
  EXPECT_NEAR(v[0].values[1], 0.8, 1e-12);
  EXPECT_NEAR(v[1].norm(), 1.0, 1e-9);
  EXPECT_NEAR(v[1].values[0], 6.0 / std::sqrt(52.0), 1e-12);
}

TEST(HttpBackend, RerankScoresMapBackToCandidates) {
  StubServer s;
  auto gw = make(s);
  std::vector<RerankCandidate> c = {{"x", "one"}, {"y", "two"}, {"z", "three"}};
  auto out = gw.rerank("q", c);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[0].candidate_id, "z");
  EXPECT_EQ(out[2].candidate_id, "x");
}

TEST(HttpBackend, UnreachableEndpointIsTransportError) {
  EndpointConfig cfg;
  cfg.base_url = "http://127.0.0.1:1";
  cfg.timeout_seconds = 1;
  GatewayOptions opts;
  opts.retry_cap = 2;
  opts.backoff_base = std::chrono::milliseconds(0);
  Gateway gw(std::make_shared<HttpBackend>(cfg), opts);
  try {
    gw.chat(req("hi"));
    FAIL();
  } catch (const GatewayError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::transport);
  }
}

TEST(HttpBackend, IdentityOmitsSecrets) {
  EndpointConfig cfg;
  cfg.base_url = "https://api.example.com/v2";
  cfg.model = "m";
  cfg.api_key = "top-secret";
  HttpBackend b(cfg);
  EXPECT_EQ(b.identity().find("top-secret"), std::string::npos);
  EXPECT_NE(b.identity().find("api.example.com"), std::string::npos);
}
