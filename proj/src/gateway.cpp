#include "bugloc/gateway.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"

namespace bugloc {

using nlohmann::json;

namespace {

class HttpTransport final : public Transport {
public:
  explicit HttpTransport(EndpointConfig cfg) : cfg_(std::move(cfg)) {}

  TransportReply post(const std::string& body_json,
                      const std::string& auth_bearer) override {
    // split base_url into host part and path prefix
    std::string url = cfg_.base_url;
    std::string scheme_host = url;
    std::string prefix;
    const std::size_t scheme = url.find("://");
    const std::size_t path_start =
        url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    if (path_start != std::string::npos) {
      scheme_host = url.substr(0, path_start);
      prefix = url.substr(path_start);
    }
    if (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

    httplib::Client client(scheme_host);
    client.set_connection_timeout(std::chrono::duration<double>(cfg_.timeout_s));
    client.set_read_timeout(std::chrono::duration<double>(cfg_.timeout_s));
    client.set_write_timeout(std::chrono::duration<double>(cfg_.timeout_s));

    httplib::Headers headers;
    if (!auth_bearer.empty()) {
      headers.emplace("Authorization", "Bearer " + auth_bearer);
    }
    auto res = client.Post(prefix + "/chat/completions", headers, body_json,
                           "application/json");
    TransportReply reply;
    if (!res) {
      reply.ok = false;
      reply.error = httplib::to_string(res.error());
      return reply;
    }
    reply.ok = true;
    reply.status = res->status;
    reply.body = res->body;
    return reply;
  }

private:
  EndpointConfig cfg_;
};

std::string user_prompt_of(const std::string& body_json) {
  auto body = json::parse(body_json, nullptr, false);
  if (body.is_discarded() || !body.contains("messages")) return {};
  for (auto it = body["messages"].rbegin(); it != body["messages"].rend();
       ++it) {
    if ((*it).value("role", "") == "user") {
      return (*it).value("content", "");
    }
  }
  return {};
}

}  // namespace

std::unique_ptr<Transport> make_http_transport(const EndpointConfig& cfg) {
  return std::make_unique<HttpTransport>(cfg);
}

MockTransport::MockTransport(const std::filesystem::path& transcript) {
  std::ifstream in(transcript);
  if (!in) {
    throw TransportError("cannot open mock transcript: " +
                         transcript.string());
  }
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto obj = json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) {
      throw SchemaError("mock transcript line is not a JSON object",
                        transcript.string(), line_no);
    }
    if (obj.contains("meta")) continue;
    Entry entry;
    entry.match = obj.value("match", "");
    for (const auto& r : obj.value("responses", json::array())) {
      entry.responses.push_back(r.get<std::string>());
    }
    entry.fail_times = obj.value("fail_times", 0);
    entry.fail_status = obj.value("fail_status", 503);
    entries_.push_back(std::move(entry));
  }
}

TransportReply MockTransport::post(const std::string& body_json,
                                   const std::string& /*auth_bearer*/) {
  std::lock_guard<std::mutex> lock(mutex_);
  ++posts_;

  const std::string prompt = user_prompt_of(body_json);
  auto body = json::parse(body_json, nullptr, false);
  const int n = body.is_discarded() ? 1 : body.value("n", 1);

  for (Entry& entry : entries_) {
    if (prompt.find(entry.match) == std::string::npos) continue;
    if (entry.fail_times > 0) {
      --entry.fail_times;
      TransportReply reply;
      if (entry.fail_status == 0) {
        reply.ok = false;  // scripted timeout
        reply.error = "scripted connection failure";
      } else {
        reply.ok = true;
        reply.status = entry.fail_status;
        reply.body = "scripted failure";
      }
      return reply;
    }
    json choices = json::array();
    const int count =
        std::min<int>(n, static_cast<int>(entry.responses.size()));
    for (int i = 0; i < count; ++i) {
      choices.push_back(
          {{"message", {{"role", "assistant"},
                        {"content", entry.responses[static_cast<std::size_t>(
                             i)]}}}});
    }
    TransportReply reply;
    reply.ok = true;
    reply.status = 200;
    reply.body = json{{"choices", choices}}.dump();
    return reply;
  }

  TransportReply reply;
  reply.ok = true;
  reply.status = 500;
  reply.body = "no transcript entry matches the prompt";
  return reply;
}

std::size_t MockTransport::posts_seen() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return posts_;
}

Gateway::Gateway(EndpointConfig cfg, std::unique_ptr<Transport> transport)
    : cfg_(std::move(cfg)), transport_(std::move(transport)) {}

Gateway Gateway::with_http(const EndpointConfig& cfg) {
  return Gateway(cfg, make_http_transport(cfg));
}

Gateway Gateway::with_mock(const std::filesystem::path& transcript,
                           EndpointConfig cfg) {
  return Gateway(std::move(cfg), std::make_unique<MockTransport>(transcript));
}

std::string build_request_body(const EndpointConfig& cfg,
                               const ChatRequest& req, int n_override) {
  json messages = json::array();
  if (req.system) {
    messages.push_back({{"role", "system"}, {"content", *req.system}});
  }
  messages.push_back({{"role", "user"}, {"content", req.user}});
  json body = {
      {"model", cfg.model},
      {"messages", messages},
      {"temperature", req.temperature},
      {"max_tokens", req.max_tokens},
      {"n", n_override},
  };
  return body.dump();
}

std::vector<std::string> Gateway::complete(const ChatRequest& req) {
  return complete_with_stats(req).texts;
}

Completion Gateway::complete_with_stats(const ChatRequest& req) {
  if (req.n < 1) throw DomainError("n must be >= 1");

  std::string key;
  if (transport_->needs_api_key()) {
    const char* value = std::getenv(cfg_.api_key_env.c_str());
    if (!value || !*value) {
      throw AuthError("environment variable '" + cfg_.api_key_env +
                      "' is not set");
    }
    key = value;
  }

  Completion result;
  while (static_cast<int>(result.texts.size()) < req.n) {
    const int remaining = req.n - static_cast<int>(result.texts.size());
    const std::string body = build_request_body(cfg_, req, remaining);

    TransportReply reply;
    bool got_reply = false;
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
      ++result.attempts;
      reply = transport_->post(body, key);

      const bool transient =
          !reply.ok || reply.status == 429 || reply.status >= 500;
      if (!transient) {
        got_reply = true;
        break;
      }
      if (attempt == cfg_.max_retries) {
        if (reply.ok && reply.status == 429) {
          throw RateLimitedError("rate limited after " +
                                 std::to_string(result.attempts) +
                                 " attempts");
        }
        throw TransportError(
            reply.ok ? "server error " + std::to_string(reply.status)
                     : "transport failure: " + reply.error,
            reply.status);
      }
      if (cfg_.backoff_base_s > 0) {
        std::this_thread::sleep_for(std::chrono::duration<double>(
            cfg_.backoff_base_s * std::pow(2.0, attempt)));
      }
    }
    if (!got_reply) break;

    if (reply.status == 401 || reply.status == 403) {
      throw AuthError("endpoint rejected credentials (status " +
                      std::to_string(reply.status) + ")");
    }
    if (reply.status != 200) {
      throw TransportError("unexpected status " +
                           std::to_string(reply.status),
                           reply.status);
    }

    auto parsed = json::parse(reply.body, nullptr, false);
    if (parsed.is_discarded() || !parsed.contains("choices") ||
        !parsed["choices"].is_array()) {
      throw MalformedResponseError("response body is not a chat completion");
    }
    std::size_t added = 0;
    for (const auto& choice : parsed["choices"]) {
      if (static_cast<int>(result.texts.size()) >= req.n) break;
      if (!choice.contains("message") ||
          !choice["message"].contains("content")) {
        throw MalformedResponseError("choice lacks message.content");
      }
      result.texts.push_back(choice["message"]["content"].get<std::string>());
      ++added;
    }
    if (added == 0) {
      throw MalformedResponseError("response contained zero choices");
    }
  }
  return result;
}

}  // namespace bugloc
