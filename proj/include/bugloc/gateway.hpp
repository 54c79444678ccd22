#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "bugloc/errors.hpp"

namespace bugloc {

struct EndpointConfig {
  std::string base_url;  // includes any /v1 prefix
  std::string model;
  std::string api_key_env = "OPENAI_API_KEY";
  double timeout_s = 60.0;
  int max_retries = 3;
  double backoff_base_s = 0.5;
};

struct ChatRequest {
  std::optional<std::string> system;
  std::string user;
  double temperature = 0.0;
  int max_tokens = 1024;
  int n = 1;
};

struct TransportReply {
  bool ok = false;  // false models a timeout / connection-level failure
  int status = 0;
  std::string body;
  std::string error;
};

// One POST of a chat-completions JSON body. The API key travels only in
// auth_bearer, never inside the body.
class Transport {
public:
  virtual ~Transport() = default;
  virtual TransportReply post(const std::string& body_json,
                              const std::string& auth_bearer) = 0;
  virtual bool needs_api_key() const { return true; }
};

std::unique_ptr<Transport> make_http_transport(const EndpointConfig& cfg);

// Offline transport scripted by a JSONL transcript. Each entry:
//   {"match": <substring of the user prompt>, "responses": [...],
//    "fail_times": <optional int>, "fail_status": <optional int>}
// The first entry whose match occurs in the user prompt answers the request;
// while its fail_times counter is positive the reply is the scripted failure
// instead. Thread-safe; performs no network I/O.
class MockTransport final : public Transport {
public:
  explicit MockTransport(const std::filesystem::path& transcript);

  TransportReply post(const std::string& body_json,
                      const std::string& auth_bearer) override;
  bool needs_api_key() const override { return false; }

  std::size_t posts_seen() const;

private:
  struct Entry {
    std::string match;
    std::vector<std::string> responses;
    int fail_times = 0;
    int fail_status = 503;
  };

  mutable std::mutex mutex_;
  std::vector<Entry> entries_;
  std::size_t posts_ = 0;
};

struct Completion {
  std::vector<std::string> texts;
  int attempts = 0;  // HTTP posts issued, including retries
};

// Chat-completion client with retry/backoff. Shareable across workers; each
// complete() call is independent.
class Gateway {
public:
  Gateway(EndpointConfig cfg, std::unique_ptr<Transport> transport);

  static Gateway with_http(const EndpointConfig& cfg);
  static Gateway with_mock(const std::filesystem::path& transcript,
                           EndpointConfig cfg = {});

  // Returns exactly req.n completion texts. Transient failures (connection
  // errors, 429, 5xx) are retried max_retries times per request with
  // exponential backoff; other 4xx fail immediately. Endpoints that return
  // fewer than n choices per call are looped until n texts are collected.
  std::vector<std::string> complete(const ChatRequest& req);
  Completion complete_with_stats(const ChatRequest& req);

  const EndpointConfig& config() const { return cfg_; }
  Transport& transport() { return *transport_; }

private:
  EndpointConfig cfg_;
  std::shared_ptr<Transport> transport_;
};

// Serialized chat-completions request body; exposed for tests that assert
// the key never leaks into the payload.
std::string build_request_body(const EndpointConfig& cfg,
                               const ChatRequest& req, int n_override);

}  // namespace bugloc
