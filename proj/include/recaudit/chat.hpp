#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "recaudit/core.hpp"
#include "recaudit/text.hpp"

namespace recaudit::gateway {

enum class Role { User, Assistant };

inline std::string_view to_string(Role r) {
  return r == Role::User ? "user" : "assistant";
}

struct ChatMessage {
  Role role = Role::User;
  std::string content;
};

struct ChatRequest {
  std::string model_id;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  int max_tokens = 500;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["model_id"] = model_id;
    nlohmann::json msgs = nlohmann::json::array();
    for (const auto& m : messages) {
      msgs.push_back({{"role", std::string(to_string(m.role))},
                      {"content", m.content}});
    }
    j["messages"] = msgs;
    j["temperature"] = temperature;
    j["max_tokens"] = max_tokens;
    return j;
  }

  static ChatRequest from_json(const nlohmann::json& j) {
    ChatRequest r;
    r.model_id = j.value("model_id", "");
    for (const auto& m : j.at("messages")) {
      ChatMessage msg;
      msg.role = m.value("role", "user") == "assistant" ? Role::Assistant
                                                        : Role::User;
      msg.content = m.value("content", "");
      r.messages.push_back(std::move(msg));
    }
    r.temperature = j.value("temperature", 0.0);
    r.max_tokens = j.value("max_tokens", 500);
    return r;
  }
};

enum class BackendKind { Live, Replay, Synthetic };

inline std::string_view to_string(BackendKind b) {
  switch (b) {
    case BackendKind::Live: return "live";
    case BackendKind::Replay: return "replay";
    case BackendKind::Synthetic: return "synthetic";
  }
  return "?";
}

struct ChatResponse {
  std::string content;
  BackendKind backend = BackendKind::Synthetic;
  std::chrono::microseconds latency{0};
  std::string request_digest;
};

// Stable across runs and key orderings: nlohmann objects serialize with
// sorted keys, so the canonical dump plus FNV-1a is a pure function of the
// request's content.
inline std::string digest(const ChatRequest& request) {
  return text::hex64(text::fnv1a64(request.to_json().dump()));
}

}  // namespace recaudit::gateway
