#include "bugloc/gateway.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "doctest.h"

using namespace bugloc;
using nlohmann::json;

namespace {

std::filesystem::path write_transcript(const std::string& name,
                                       const std::vector<json>& entries) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path);
  for (const json& e : entries) out << e.dump() << "\n";
  return path;
}

EndpointConfig fast_config() {
  EndpointConfig cfg;
  cfg.model = "test-model";
  cfg.max_retries = 3;
  cfg.backoff_base_s = 0.0;  // no sleeping in tests
  return cfg;
}

// transport that records every body it is given and always succeeds
class CapturingTransport final : public Transport {
public:
  TransportReply post(const std::string& body_json,
                      const std::string& auth_bearer) override {
    bodies.push_back(body_json);
    bearers.push_back(auth_bearer);
    TransportReply reply;
    reply.ok = true;
    reply.status = 200;
    reply.body =
        json{{"choices",
              {{{"message", {{"role", "assistant"}, {"content", "ok"}}}}}}}
            .dump();
    return reply;
  }
  std::vector<std::string> bodies;
  std::vector<std::string> bearers;
};

}  // namespace

TEST_CASE("mock transport: scripted responses in order") {
  const auto path = write_transcript(
      "bugloc_gw_basic.jsonl",
      {json{{"match", "prompt"}, {"responses", {"A", "B"}}}});
  Gateway gateway = Gateway::with_mock(path, fast_config());
  ChatRequest req;
  req.user = "some prompt text";
  req.n = 2;
  CHECK(gateway.complete(req) == std::vector<std::string>{"A", "B"});
  std::filesystem::remove(path);
}

TEST_CASE("mock transport: n beyond the scripted list loops the request") {
  const auto path = write_transcript(
      "bugloc_gw_loop.jsonl",
      {json{{"match", ""}, {"responses", {"only"}}}});
  Gateway gateway = Gateway::with_mock(path, fast_config());
  ChatRequest req;
  req.user = "anything";
  req.n = 3;
  const Completion result = gateway.complete_with_stats(req);
  CHECK(result.texts == std::vector<std::string>{"only", "only", "only"});
  CHECK(result.attempts == 3);  // one post per missing choice
  std::filesystem::remove(path);
}

TEST_CASE("retry: two scripted failures then success") {
  const auto path = write_transcript(
      "bugloc_gw_retry.jsonl",
      {json{{"match", ""}, {"responses", {"done"}}, {"fail_times", 2}}});
  Gateway gateway = Gateway::with_mock(path, fast_config());
  ChatRequest req;
  req.user = "x";
  const Completion result = gateway.complete_with_stats(req);
  CHECK(result.texts == std::vector<std::string>{"done"});
  CHECK(result.attempts == 3);
  std::filesystem::remove(path);
}

TEST_CASE("retry: attempts never exceed max_retries + 1") {
  const auto path = write_transcript(
      "bugloc_gw_exhaust.jsonl",
      {json{{"match", ""}, {"responses", {"never"}}, {"fail_times", 99}}});
  EndpointConfig cfg = fast_config();
  cfg.max_retries = 2;
  Gateway gateway = Gateway::with_mock(path, cfg);
  ChatRequest req;
  req.user = "x";
  try {
    gateway.complete_with_stats(req);
    FAIL("expected TransportError");
  } catch (const TransportError& e) {
    CHECK(e.status == 503);
  }
  auto& mock = dynamic_cast<MockTransport&>(gateway.transport());
  CHECK(mock.posts_seen() == 3);  // max_retries + 1
  std::filesystem::remove(path);
}

TEST_CASE("retry: 429 exhaustion raises RateLimited") {
  const auto path = write_transcript(
      "bugloc_gw_429.jsonl", {json{{"match", ""},
                                   {"responses", {"never"}},
                                   {"fail_times", 99},
                                   {"fail_status", 429}}});
  EndpointConfig cfg = fast_config();
  cfg.max_retries = 1;
  Gateway gateway = Gateway::with_mock(path, cfg);
  ChatRequest req;
  req.user = "x";
  CHECK_THROWS_AS(gateway.complete(req), RateLimitedError);
  std::filesystem::remove(path);
}

TEST_CASE("non-retryable statuses fail immediately") {
  const auto path = write_transcript(
      "bugloc_gw_4xx.jsonl", {json{{"match", ""},
                                   {"responses", {"never"}},
                                   {"fail_times", 99},
                                   {"fail_status", 400}}});
  EndpointConfig cfg = fast_config();
  Gateway gateway = Gateway::with_mock(path, cfg);
  ChatRequest req;
  req.user = "x";
  CHECK_THROWS_AS(gateway.complete(req), TransportError);
  auto& mock = dynamic_cast<MockTransport&>(gateway.transport());
  CHECK(mock.posts_seen() == 1);  // no retry on plain 4xx
  std::filesystem::remove(path);
}

TEST_CASE("auth: missing key environment variable fails before any I/O") {
  EndpointConfig cfg = fast_config();
  cfg.api_key_env = "BUGLOC_TEST_KEY_UNSET";
  unsetenv("BUGLOC_TEST_KEY_UNSET");
  auto transport = std::make_unique<CapturingTransport>();
  CapturingTransport* raw = transport.get();
  Gateway gateway(cfg, std::move(transport));
  ChatRequest req;
  req.user = "x";
  CHECK_THROWS_AS(gateway.complete(req), AuthError);
  CHECK(raw->bodies.empty());  // zero network activity
}

TEST_CASE("auth: the key travels in the header, never the body") {
  EndpointConfig cfg = fast_config();
  cfg.api_key_env = "BUGLOC_TEST_KEY";
  setenv("BUGLOC_TEST_KEY", "sk-super-secret-value", 1);
  auto transport = std::make_unique<CapturingTransport>();
  CapturingTransport* raw = transport.get();
  Gateway gateway(cfg, std::move(transport));
  ChatRequest req;
  req.system = "be terse";
  req.user = "where is the bug";
  req.n = 1;
  gateway.complete(req);
  REQUIRE(raw->bodies.size() == 1);
  CHECK(raw->bodies[0].find("sk-super-secret-value") == std::string::npos);
  CHECK(raw->bearers[0] == "sk-super-secret-value");

  // body carries the conversation
  const json body = json::parse(raw->bodies[0]);
  CHECK(body["messages"][0]["role"] == "system");
  CHECK(body["messages"][1]["content"] == "where is the bug");
  unsetenv("BUGLOC_TEST_KEY");
}

TEST_CASE("malformed completion bodies are reported") {
  const auto path = write_transcript(
      "bugloc_gw_bad.jsonl",
      {json{{"match", ""}, {"responses", json::array()}}});
  Gateway gateway = Gateway::with_mock(path, fast_config());
  ChatRequest req;
  req.user = "x";
  CHECK_THROWS_AS(gateway.complete(req), MalformedResponseError);
  std::filesystem::remove(path);
}

TEST_CASE("request validation") {
  const auto path = write_transcript(
      "bugloc_gw_n.jsonl", {json{{"match", ""}, {"responses", {"a"}}}});
  Gateway gateway = Gateway::with_mock(path, fast_config());
  ChatRequest req;
  req.user = "x";
  req.n = 0;
  CHECK_THROWS_AS(gateway.complete(req), DomainError);
  std::filesystem::remove(path);
}
