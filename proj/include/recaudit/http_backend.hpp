#pragma once

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <memory>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "recaudit/chat.hpp"
#include "recaudit/core.hpp"
#include "recaudit/rate_limiter.hpp"

namespace recaudit::gateway {

struct HttpBackendConfig {
  std::string name;
  std::string base_url;            // e.g. http://localhost:8089
  std::string model_id;
  std::string auth_env;            // env var holding the bearer token
  std::string endpoint_path = "/v1/chat/completions";
  double requests_per_second = 1.0;
  int max_retries = 3;
  double backoff_initial_s = 1.0;
};

// Chat-completion wire protocol: messages array in, choices/content out.
// Retries transport failures and 429/5xx with exponential backoff; other
// HTTP errors fail immediately.
class HttpBackend {
 public:
  explicit HttpBackend(HttpBackendConfig config,
                       RateLimiter::SleepFn sleep = RateLimiter::default_sleep)
      : config_(std::move(config)),
        limiter_(config_.requests_per_second),
        sleep_(std::move(sleep)) {}

  ChatResponse chat(const ChatRequest& request) {
    nlohmann::json body;
    body["model"] = config_.model_id.empty() ? request.model_id
                                             : config_.model_id;
    nlohmann::json msgs = nlohmann::json::array();
    for (const auto& m : request.messages)
      msgs.push_back({{"role", std::string(to_string(m.role))},
                      {"content", m.content}});
    body["messages"] = msgs;
    body["temperature"] = request.temperature;
    body["max_tokens"] = request.max_tokens;
    const std::string payload = body.dump();

    std::string bearer;
    if (!config_.auth_env.empty()) {
      const char* token = std::getenv(config_.auth_env.c_str());
      if (!token)
        throw ConfigError("credential env var not set: " + config_.auth_env);
      bearer = token;
    }

    double backoff = config_.backoff_initial_s;
    std::string last_error;
    for (int attempt = 1; attempt <= config_.max_retries; ++attempt) {
      limiter_.acquire();
      const auto start = std::chrono::steady_clock::now();
      httplib::Client client(config_.base_url);
      client.set_connection_timeout(10);
      client.set_read_timeout(60);
      httplib::Headers headers;
      if (!bearer.empty())
        headers.emplace("Authorization", "Bearer " + bearer);
      ++network_hits_;
      auto res = client.Post(config_.endpoint_path, headers, payload,
                             "application/json");
      const auto latency =
          std::chrono::duration_cast<std::chrono::microseconds>(
              std::chrono::steady_clock::now() - start);
      if (res && res->status >= 200 && res->status < 300) {
        const auto j = nlohmann::json::parse(res->body, nullptr, false);
        if (j.is_discarded())
          throw TransportError(config_.name + ": non-JSON completion body");
        std::string content;
        if (j.contains("choices") && j["choices"].is_array() &&
            !j["choices"].empty()) {
          const auto& choice = j["choices"][0];
          if (choice.contains("message"))
            content = choice["message"].value("content", "");
          else
            content = choice.value("text", "");
        }
        if (content.empty())
          throw TransportError(config_.name + ": empty completion");
        ChatResponse response;
        response.content = content;
        response.backend = BackendKind::Live;
        response.latency = latency;
        response.request_digest = digest(request);
        return response;
      }
      const bool retryable =
          !res || res->status == 429 || res->status >= 500;
      last_error = !res ? std::string("transport failure")
                        : "HTTP " + std::to_string(res->status);
      if (!retryable)
        throw TransportError(config_.name + ": " + last_error);
      if (attempt < config_.max_retries) {
        sleep_(backoff);
        backoff *= 2.0;
      }
    }
    throw TransportError(config_.name + ": " + last_error + " after " +
                         std::to_string(config_.max_retries) + " attempts");
  }

  std::uint64_t network_hits() const { return network_hits_.load(); }

 private:
  HttpBackendConfig config_;
  RateLimiter limiter_;
  RateLimiter::SleepFn sleep_;
  std::atomic<std::uint64_t> network_hits_{0};
};

}  // namespace recaudit::gateway
