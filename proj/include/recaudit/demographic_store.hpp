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
#include "recaudit/jsonio.hpp"
#include "recaudit/text.hpp"

namespace recaudit::stores {

struct DemographicEntity {
  std::string id;
  std::string canonical_name;
  Task kind = Task::University;
  std::optional<City> city;
  std::uint64_t total_population = 0;
  std::map<RaceGroup, std::uint64_t> group_counts;
  std::vector<std::string> aliases;
};

// share of `group` in the entity's population; missing group counts as zero
inline double group_share(const DemographicEntity& e, RaceGroup group) {
  if (e.total_population == 0)
    throw DataError("group_share: entity has zero population: " + e.id);
  const auto it = e.group_counts.find(group);
  if (it == e.group_counts.end()) return 0.0;
  return static_cast<double>(it->second) /
         static_cast<double>(e.total_population);
}

namespace detail {

// Minimal RFC-4180 style row reader (quotes, embedded commas, CRLF).
inline std::vector<std::string> parse_csv_row(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c == '\r') {
      // skip
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

inline std::uint64_t parse_count(const std::string& s, const std::string& ctx) {
  const std::string t = text::trim(s);
  if (t.empty()) return 0;
  if (t[0] == '-') throw DataError("negative count in " + ctx + ": " + t);
  std::uint64_t v = 0;
  for (char c : t) {
    if (c < '0' || c > '9')
      throw DataError("non-numeric count in " + ctx + ": " + t);
    v = v * 10 + static_cast<std::uint64_t>(c - '0');
  }
  return v;
}

}  // namespace detail

// Immutable collection of demographic entities of one kind, with the
// alias table attached at ingestion time.
class DemographicStore {
 public:
  DemographicStore() = default;

  static DemographicStore ingest(
      const std::filesystem::path& dataset_file, Task kind,
      const std::optional<std::filesystem::path>& alias_file = std::nullopt) {
    DemographicStore store;
    const std::string ext = dataset_file.extension().string();
    if (ext == ".csv") {
      store.load_csv(dataset_file, kind);
    } else if (ext == ".json") {
      store.load_json(dataset_file, kind);
    } else {
      throw ConfigError("unsupported dataset extension: " +
                        dataset_file.string());
    }
    if (alias_file) store.load_aliases(*alias_file);
    store.finalize();
    return store;
  }

  const std::vector<DemographicEntity>& entities() const { return entities_; }

  const DemographicEntity* by_id(const std::string& id) const {
    const auto it = by_id_.find(id);
    return it == by_id_.end() ? nullptr : &entities_[it->second];
  }

  std::vector<const DemographicEntity*> in_city(City city) const {
    std::vector<const DemographicEntity*> out;
    for (const auto& e : entities_) {
      if (e.city && *e.city == city) out.push_back(&e);
    }
    return out;
  }

  Task kind() const { return kind_; }

  // External alias table plus dataset-embedded aliases, both keyed on the
  // case-folded alias string; values are entity indices.
  const std::multimap<std::string, std::size_t>& alias_index() const {
    return alias_index_;
  }

  void dump_csv(const std::filesystem::path& path) const {
    if (path.has_parent_path())
      std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write file: " + path.string());
    out << "id,canonical_name,kind,city,total_population,count_white,"
           "count_black,count_hispanic,count_asian,aliases\n";
    for (const auto& e : entities_) {
      std::string aliases;
      for (std::size_t i = 0; i < e.aliases.size(); ++i) {
        if (i) aliases += ";";
        aliases += e.aliases[i];
      }
      out << detail::csv_escape(e.id) << ','
          << detail::csv_escape(e.canonical_name) << ',' << to_string(e.kind)
          << ',' << detail::csv_escape(e.city ? std::string(city_name(*e.city))
                                              : std::string())
          << ',' << e.total_population;
      for (RaceGroup g : kAllRaces) {
        const auto it = e.group_counts.find(g);
        out << ',' << (it == e.group_counts.end() ? 0 : it->second);
      }
      out << ',' << detail::csv_escape(aliases) << '\n';
    }
  }

  void dump_json(const std::filesystem::path& path) const {
    nlohmann::json j;
    j["schema_version"] = 1;
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : entities_) {
      nlohmann::json je;
      je["id"] = e.id;
      je["canonical_name"] = e.canonical_name;
      je["kind"] = std::string(to_string(e.kind));
      if (e.city) je["city"] = std::string(city_name(*e.city));
      je["total_population"] = e.total_population;
      nlohmann::json counts;
      for (RaceGroup g : kAllRaces) {
        const auto it = e.group_counts.find(g);
        counts[text::to_lower(to_string(g))] =
            it == e.group_counts.end() ? 0 : it->second;
      }
      je["counts"] = counts;
      je["aliases"] = e.aliases;
      arr.push_back(je);
    }
    j["entities"] = arr;
    jsonio::save_file(path, j);
  }

 private:
  void load_csv(const std::filesystem::path& path, Task kind) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open dataset: " + path.string());
    std::string line;
    if (!std::getline(in, line))
      throw DataError("empty dataset file: " + path.string());
    const auto header = detail::parse_csv_row(line);
    const std::vector<std::string> expected = {
        "id",          "canonical_name", "kind",
        "city",        "total_population", "count_white",
        "count_black", "count_hispanic", "count_asian",
        "aliases"};
    if (header != expected)
      throw DataError("unexpected dataset header in " + path.string());
    std::size_t row_no = 1;
    while (std::getline(in, line)) {
      ++row_no;
      if (text::trim(line).empty()) continue;
      const auto f = detail::parse_csv_row(line);
      if (f.size() != expected.size())
        throw DataError("row " + std::to_string(row_no) + " in " +
                        path.string() + ": wrong field count");
      DemographicEntity e;
      e.id = text::trim(f[0]);
      e.canonical_name = text::trim(f[1]);
      const auto k = task_from_string(text::trim(f[2]));
      if (!k) throw DataError("row " + std::to_string(row_no) +
                              ": unknown kind '" + f[2] + "'");
      e.kind = *k;
      const std::string city_field = text::trim(f[3]);
      if (!city_field.empty()) {
        const auto c = city_from_string(city_field);
        if (!c) throw DataError("row " + std::to_string(row_no) +
                                ": unknown city '" + city_field + "'");
        e.city = *c;
      }
      const std::string ctx = path.string() + " row " + std::to_string(row_no);
      e.total_population = detail::parse_count(f[4], ctx);
      e.group_counts[RaceGroup::White] = detail::parse_count(f[5], ctx);
      e.group_counts[RaceGroup::Black] = detail::parse_count(f[6], ctx);
      e.group_counts[RaceGroup::Hispanic] = detail::parse_count(f[7], ctx);
      e.group_counts[RaceGroup::Asian] = detail::parse_count(f[8], ctx);
      for (const auto& a : text::split(f[9], ';')) {
        const std::string alias = text::trim(a);
        if (!alias.empty()) e.aliases.push_back(alias);
      }
      add_entity(std::move(e), kind, ctx);
    }
  }

  void load_json(const std::filesystem::path& path, Task kind) {
    const auto j = jsonio::load_file(path);
    jsonio::check_schema_version(j, 1, "dataset " + path.string());
    if (!j.contains("entities") || !j["entities"].is_array())
      throw DataError("dataset missing entities array: " + path.string());
    std::size_t idx = 0;
    for (const auto& je : j["entities"]) {
      const std::string ctx =
          path.string() + " entities[" + std::to_string(idx++) + "]";
      DemographicEntity e;
      e.id = je.value("id", "");
      e.canonical_name = je.value("canonical_name", "");
      const auto k = task_from_string(je.value("kind", ""));
      if (!k) throw DataError(ctx + ": unknown kind");
      e.kind = *k;
      if (je.contains("city")) {
        const auto c = city_from_string(je["city"].get<std::string>());
        if (!c) throw DataError(ctx + ": unknown city");
        e.city = *c;
      }
      if (je.value("total_population", -1.0) < 0)
        throw DataError(ctx + ": negative or missing total_population");
      e.total_population = je["total_population"].get<std::uint64_t>();
      const auto& counts = je.at("counts");
      for (RaceGroup g : kAllRaces) {
        const std::string key = text::to_lower(to_string(g));
        if (counts.contains(key)) {
          if (counts[key].is_number_integer() &&
              counts[key].get<std::int64_t>() < 0)
            throw DataError(ctx + ": negative count for " + key);
          e.group_counts[g] = counts[key].get<std::uint64_t>();
        } else {
          e.group_counts[g] = 0;
        }
      }
      if (je.contains("aliases"))
        e.aliases = je["aliases"].get<std::vector<std::string>>();
      add_entity(std::move(e), kind, ctx);
    }
  }

  void add_entity(DemographicEntity e, Task expected_kind,
                  const std::string& ctx) {
    if (e.id.empty()) throw DataError(ctx + ": empty id");
    if (e.canonical_name.empty())
      throw DataError(ctx + ": empty canonical_name");
    if (e.kind != expected_kind)
      throw DataError(ctx + ": entity kind does not match dataset kind");
    if (e.kind == Task::Neighborhood && !e.city)
      throw DataError(ctx + ": neighborhood entity without a city");
    std::uint64_t sum = 0;
    for (const auto& [g, c] : e.group_counts) sum += c;
    if (sum > e.total_population)
      throw DataError(ctx + ": group counts exceed total_population");
    if (by_id_.count(e.id)) throw DataError(ctx + ": duplicate id " + e.id);
    const std::string scope_key =
        text::to_lower(e.canonical_name) + "|" +
        (e.city ? std::string(city_name(*e.city)) : std::string());
    if (!scoped_names_.insert(scope_key).second)
      throw DataError(ctx + ": duplicate canonical name in scope: " +
                      e.canonical_name);
    by_id_[e.id] = entities_.size();
    entities_.push_back(std::move(e));
  }

  void load_aliases(const std::filesystem::path& path) {
    const auto j = jsonio::load_file(path);
    jsonio::check_schema_version(j, 1, "alias file " + path.string());
    if (!j.contains("aliases") || !j["aliases"].is_object())
      throw DataError("alias file missing aliases object: " + path.string());
    for (const auto& [alias, canonical] : j["aliases"].items()) {
      external_aliases_[text::to_lower(text::trim(alias))] =
          canonical.get<std::string>();
    }
  }

  void finalize() {
    std::map<std::string, std::vector<std::size_t>> canon_lower;
    for (std::size_t i = 0; i < entities_.size(); ++i)
      canon_lower[text::to_lower(entities_[i].canonical_name)].push_back(i);
    for (std::size_t i = 0; i < entities_.size(); ++i) {
      for (const auto& a : entities_[i].aliases)
        alias_index_.emplace(text::to_lower(a), i);
    }
    for (const auto& [alias, canonical] : external_aliases_) {
      const auto it = canon_lower.find(text::to_lower(canonical));
      if (it == canon_lower.end())
        throw DataError("alias '" + alias +
                        "' points to unknown canonical name: " + canonical);
      for (std::size_t idx : it->second) alias_index_.emplace(alias, idx);
    }
    kind_ = entities_.empty() ? Task::University : entities_.front().kind;
  }

  std::vector<DemographicEntity> entities_;
  std::map<std::string, std::size_t> by_id_;
  std::set<std::string> scoped_names_;
  std::map<std::string, std::string> external_aliases_;
  std::multimap<std::string, std::size_t> alias_index_;
  Task kind_ = Task::University;
};

}  // namespace recaudit::stores
