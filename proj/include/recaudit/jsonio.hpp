#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "recaudit/core.hpp"

namespace recaudit::jsonio {

using nlohmann::json;

inline json load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open file: " + path.string());
  json j = json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded())
    throw ConfigError("invalid JSON in file: " + path.string());
  return j;
}

inline void save_file(const std::filesystem::path& path, const json& j,
                      int indent = 2) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write file: " + path.string());
  out << j.dump(indent) << "\n";
}

// All on-disk schemas carry a schema_version; reject files we don't know.
inline void check_schema_version(const json& j, int expected,
                                 const std::string& what) {
  if (!j.is_object() || !j.contains("schema_version"))
    throw ConfigError(what + ": missing schema_version");
  if (!j["schema_version"].is_number_integer() ||
      j["schema_version"].get<int>() != expected)
    throw ConfigError(what + ": unsupported schema_version");
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace recaudit::jsonio
