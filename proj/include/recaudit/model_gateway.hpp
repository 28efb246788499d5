#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <utility>

#include "recaudit/chat.hpp"
#include "recaudit/core.hpp"
#include "recaudit/http_backend.hpp"
#include "recaudit/replay_cache.hpp"
#include "recaudit/synthetic_model.hpp"

namespace recaudit::gateway {

// Front door for all model traffic. Live requests go cache-first and every
// fresh completion is recorded, so a warm cache replays a whole run with
// zero network operations; replay-only mode turns a miss into an error.
class ModelGateway {
 public:
  static ModelGateway synthetic(SyntheticModel model) {
    ModelGateway g;
    g.synthetic_ = std::make_unique<SyntheticModel>(std::move(model));
    return g;
  }

  static ModelGateway replay(std::shared_ptr<ReplayCache> cache) {
    ModelGateway g;
    g.cache_ = std::move(cache);
    return g;
  }

  static ModelGateway live(HttpBackendConfig config,
                           std::shared_ptr<ReplayCache> cache) {
    ModelGateway g;
    g.http_ = std::make_unique<HttpBackend>(std::move(config));
    g.cache_ = std::move(cache);
    return g;
  }

  ChatResponse chat(const ChatRequest& request) {
    const std::string req_digest = digest(request);
    if (synthetic_) {
      ChatResponse r = synthetic_->chat(request);
      if (r.content.empty()) throw TransportError("empty completion");
      return r;
    }
    if (cache_) {
      if (auto hit = cache_->lookup(req_digest)) {
        ++cache_hits_;
        ChatResponse r;
        r.content = *hit;
        r.backend = BackendKind::Replay;
        r.request_digest = req_digest;
        return r;
      }
      if (!http_)
        throw CacheMissError("replay-only gateway has no record for digest " +
                             req_digest);
    }
    if (!http_) throw ConfigError("gateway has no backend configured");
    ChatResponse r = http_->chat(request);
    if (cache_) {
      const auto now = std::chrono::duration_cast<std::chrono::seconds>(
                           std::chrono::system_clock::now().time_since_epoch())
                           .count();
      cache_->append(req_digest, request, r.content, now);
    }
    return r;
  }

  std::uint64_t network_hits() const {
    return http_ ? http_->network_hits() : 0;
  }
  std::uint64_t cache_hits() const { return cache_hits_.load(); }
  bool offline() const { return http_ == nullptr; }

  ModelGateway(ModelGateway&& other) noexcept
      : synthetic_(std::move(other.synthetic_)),
        http_(std::move(other.http_)),
        cache_(std::move(other.cache_)),
        cache_hits_(other.cache_hits_.load()) {}

 private:
  ModelGateway() = default;

  std::unique_ptr<SyntheticModel> synthetic_;
  std::unique_ptr<HttpBackend> http_;
  std::shared_ptr<ReplayCache> cache_;
  std::atomic<std::uint64_t> cache_hits_{0};
};

}  // namespace recaudit::gateway
