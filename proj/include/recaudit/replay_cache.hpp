#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>

#include <json.hpp>

#include "recaudit/chat.hpp"
#include "recaudit/core.hpp"

namespace recaudit::gateway {

// Append-only line-delimited JSON cache of (digest, request, response)
// records. Lookups are in-memory; appends are serialized and flushed so a
// crashed run can resume from whatever was recorded.
class ReplayCache {
 public:
  ReplayCache() = default;

  explicit ReplayCache(std::filesystem::path path) : path_(std::move(path)) {
    if (std::filesystem::exists(path_)) {
      std::ifstream in(path_);
      std::string line;
      std::size_t line_no = 0;
      while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.contains("digest"))
          throw DataError("corrupt cache line " + std::to_string(line_no) +
                          " in " + path_.string());
        entries_[j["digest"].get<std::string>()] =
            j.value("response", std::string());
      }
    }
  }

  std::optional<std::string> lookup(const std::string& digest) const {
    std::lock_guard lock(mutex_);
    const auto it = entries_.find(digest);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  void append(const std::string& digest, const ChatRequest& request,
              const std::string& response, std::int64_t timestamp) {
    std::lock_guard lock(mutex_);
    if (entries_.count(digest)) return;
    entries_[digest] = response;
    if (path_.empty()) return;
    if (path_.has_parent_path())
      std::filesystem::create_directories(path_.parent_path());
    std::ofstream out(path_, std::ios::app);
    if (!out) throw ConfigError("cannot append to cache: " + path_.string());
    nlohmann::json j;
    j["digest"] = digest;
    j["request"] = request.to_json();
    j["response"] = response;
    j["timestamp"] = timestamp;
    out << j.dump() << "\n";
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
  }

 private:
  std::filesystem::path path_;
  std::map<std::string, std::string> entries_;
  mutable std::mutex mutex_;
};

}  // namespace recaudit::gateway
