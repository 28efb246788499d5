#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "recaudit/core.hpp"
#include "recaudit/jsonio.hpp"

namespace recaudit::prompts {

// Values a mandatory slot can take; budgets and the like may vary by city.
struct SlotDomain {
  std::vector<std::string> values;
  std::map<City, std::vector<std::string>> per_city;

  const std::vector<std::string>& for_city(std::optional<City> city) const {
    if (city) {
      const auto it = per_city.find(*city);
      if (it != per_city.end()) return it->second;
    }
    return values;
  }
};

struct SlotDomains {
  std::map<std::string, SlotDomain> domains;

  const SlotDomain& at(const std::string& slot) const {
    const auto it = domains.find(slot);
    if (it == domains.end())
      throw ConfigError("no slot domain configured for '" + slot + "'");
    return it->second;
  }
};

inline SlotDomains load_slot_domains(const std::filesystem::path& path) {
  const auto j = jsonio::load_file(path);
  jsonio::check_schema_version(j, 1, "slot domains " + path.string());
  if (!j.contains("slots") || !j["slots"].is_object())
    throw ConfigError("slot domains " + path.string() +
                      ": missing slots object");
  SlotDomains out;
  for (const auto& [slot, body] : j["slots"].items()) {
    SlotDomain d;
    if (body.is_array()) {
      d.values = body.get<std::vector<std::string>>();
    } else if (body.is_object() && body.contains("per_city")) {
      for (const auto& [city_str, vals] : body["per_city"].items()) {
        const auto city = city_from_string(city_str);
        if (!city)
          throw ConfigError("slot domains: unknown city '" + city_str + "'");
        d.per_city[*city] = vals.get<std::vector<std::string>>();
      }
      if (body.contains("values"))
        d.values = body["values"].get<std::vector<std::string>>();
    } else {
      throw ConfigError("slot domains: bad entry for slot '" + slot + "'");
    }
    out.domains[slot] = std::move(d);
  }
  return out;
}

}  // namespace recaudit::prompts
