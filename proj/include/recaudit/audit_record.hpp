#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "recaudit/core.hpp"
#include "recaudit/entity_matching.hpp"
#include "recaudit/jsonio.hpp"
#include "recaudit/query_spec.hpp"
#include "recaudit/response_parser.hpp"

namespace recaudit::audit {

// One completed (or classified-failed) two-turn trial. Records are
// append-only: the store never rewrites a line.
struct AuditRecord {
  std::string spec_id;
  prompts::QuerySpec spec;
  std::string backend;
  std::string first_turn;
  std::string first_reply;
  std::string second_turn;
  std::string second_reply;
  std::optional<parsers::ParseMode> parse_mode;
  std::vector<parsers::RecommendationItem> items;
  std::vector<stores::ResolutionResult> resolutions;
  std::map<RaceGroup, double> mean_share;  // empty when nothing resolved
  int resolved_count = 0;
  int unresolved_count = 0;
  std::optional<parsers::Verdict> acknowledgment;
  std::string failure_class;  // empty on success
  std::int64_t timestamp = 0;  // 0 for offline backends (determinism)

  bool ok() const { return failure_class.empty(); }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["spec_id"] = spec_id;
    j["spec"] = spec.to_json();
    j["backend"] = backend;
    j["first_turn"] = first_turn;
    j["first_reply"] = first_reply;
    j["second_turn"] = second_turn;
    j["second_reply"] = second_reply;
    if (parse_mode)
      j["parse_mode"] = std::string(parsers::to_string(*parse_mode));
    nlohmann::json items_json = nlohmann::json::array();
    for (const auto& item : items)
      items_json.push_back(
          {{"name", item.name}, {"explanation", item.explanation}});
    j["items"] = items_json;
    nlohmann::json res_json = nlohmann::json::array();
    for (const auto& r : resolutions) {
      nlohmann::json jr;
      jr["query_name"] = r.query_name;
      if (r.resolved()) {
        jr["entity_id"] = r.entity_id;
        jr["method"] = std::string(stores::to_string(*r.method));
      }
      if (r.similarity) jr["similarity"] = *r.similarity;
      res_json.push_back(std::move(jr));
    }
    j["resolutions"] = res_json;
    if (!mean_share.empty()) {
      nlohmann::json shares;
      for (const auto& [g, v] : mean_share)
        shares[std::string(to_string(g))] = v;
      j["mean_share"] = shares;
    }
    j["resolved_count"] = resolved_count;
    j["unresolved_count"] = unresolved_count;
    if (acknowledgment)
      j["acknowledgment"] =
          std::string(parsers::to_string(*acknowledgment));
    if (!failure_class.empty()) j["failure_class"] = failure_class;
    j["timestamp"] = timestamp;
    return j;
  }

  static AuditRecord from_json(const nlohmann::json& j) {
    AuditRecord r;
    r.spec_id = j.value("spec_id", "");
    r.spec = prompts::QuerySpec::from_json(j.at("spec"));
    r.backend = j.value("backend", "");
    r.first_turn = j.value("first_turn", "");
    r.first_reply = j.value("first_reply", "");
    r.second_turn = j.value("second_turn", "");
    r.second_reply = j.value("second_reply", "");
    if (j.contains("parse_mode")) {
      const auto m =
          parsers::parse_mode_from_string(j["parse_mode"].get<std::string>());
      if (m) r.parse_mode = *m;
    }
    for (const auto& ji : j.value("items", nlohmann::json::array())) {
      r.items.push_back(
          {ji.value("name", ""), ji.value("explanation", "")});
    }
    for (const auto& jr : j.value("resolutions", nlohmann::json::array())) {
      stores::ResolutionResult res;
      res.query_name = jr.value("query_name", "");
      res.entity_id = jr.value("entity_id", "");
      if (jr.contains("method"))
        res.method =
            stores::match_method_from_string(jr["method"].get<std::string>());
      if (jr.contains("similarity"))
        res.similarity = jr["similarity"].get<double>();
      r.resolutions.push_back(std::move(res));
    }
    if (j.contains("mean_share")) {
      for (const auto& [k, v] : j["mean_share"].items()) {
        const auto g = race_from_string(k);
        if (g) r.mean_share[*g] = v.get<double>();
      }
    }
    r.resolved_count = j.value("resolved_count", 0);
    r.unresolved_count = j.value("unresolved_count", 0);
    if (j.contains("acknowledgment")) {
      const auto v = parsers::verdict_from_string(
          j["acknowledgment"].get<std::string>());
      if (v) r.acknowledgment = *v;
    }
    r.failure_class = j.value("failure_class", "");
    r.timestamp = j.value("timestamp", std::int64_t{0});
    return r;
  }
};

// Line-delimited JSON results store plus a run_meta sidecar tying the
// records back to the exact config digest and seed that produced them.
class ResultsStore {
 public:
  explicit ResultsStore(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
  }

  std::filesystem::path records_path() const {
    return dir_ / "records.jsonl";
  }
  std::filesystem::path meta_path() const { return dir_ / "run_meta.json"; }
  const std::filesystem::path& dir() const { return dir_; }

  void write_meta(const std::string& config_digest, std::uint64_t seed,
                  const std::vector<std::string>& backends) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["config_digest"] = config_digest;
    j["seed"] = seed;
    j["backends"] = backends;
    j["harness_version"] = std::string(kVersion);
    jsonio::save_file(meta_path(), j);
  }

  nlohmann::json read_meta() const {
    if (!std::filesystem::exists(meta_path()))
      throw ConfigError("results store has no run_meta.json: " +
                        dir_.string());
    return jsonio::load_file(meta_path());
  }

  void append(const AuditRecord& record) {
    std::ofstream out(records_path(), std::ios::app);
    if (!out)
      throw ConfigError("cannot append to results store: " + dir_.string());
    out << record.to_json().dump() << "\n";
  }

  std::vector<AuditRecord> load_all() const {
    std::vector<AuditRecord> records;
    if (!std::filesystem::exists(records_path())) return records;
    std::ifstream in(records_path());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (text::trim(line).empty()) continue;
      const auto j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded())
        throw DataError("corrupt record at line " + std::to_string(line_no) +
                        " in " + records_path().string());
      records.push_back(AuditRecord::from_json(j));
    }
    return records;
  }

  std::set<std::string> known_ids() const {
    std::set<std::string> ids;
    for (const auto& r : load_all())
      ids.insert(r.backend + "/" + r.spec_id);
    return ids;
  }

 private:
  std::filesystem::path dir_;
};

}  // namespace recaudit::audit
