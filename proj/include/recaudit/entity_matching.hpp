#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "recaudit/core.hpp"
#include "recaudit/demographic_store.hpp"
#include "recaudit/text.hpp"

namespace recaudit::stores {

enum class MatchMethod { Exact, Stripped, Alias, Fuzzy };

inline std::string_view to_string(MatchMethod m) {
  switch (m) {
    case MatchMethod::Exact: return "exact";
    case MatchMethod::Stripped: return "stripped";
    case MatchMethod::Alias: return "alias";
    case MatchMethod::Fuzzy: return "fuzzy";
  }
  return "?";
}

inline std::optional<MatchMethod> match_method_from_string(
    std::string_view s) {
  if (s == "exact") return MatchMethod::Exact;
  if (s == "stripped") return MatchMethod::Stripped;
  if (s == "alias") return MatchMethod::Alias;
  if (s == "fuzzy") return MatchMethod::Fuzzy;
  return std::nullopt;
}

// Unresolved is a value, not an error: entity_id is empty when no match.
struct ResolutionResult {
  std::string query_name;
  std::string entity_id;
  std::optional<MatchMethod> method;
  std::optional<double> similarity;

  bool resolved() const { return !entity_id.empty(); }
};

inline constexpr double kDefaultFuzzyThreshold = 0.6;

// Ratcliff-Obershelp similarity: recursively take the longest common
// substring (leftmost on ties) and match the pieces on either side.
// Returns 2*M / (|a|+|b|).
namespace matching_detail {

struct Block {
  std::size_t a_pos = 0;
  std::size_t b_pos = 0;
  std::size_t len = 0;
};

inline Block longest_common_block(std::string_view a, std::string_view b) {
  Block best;
  if (a.empty() || b.empty()) return best;
  // rolling-row DP over match lengths ending at (i, j)
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (a[i] == b[j]) {
        cur[j + 1] = prev[j] + 1;
        if (cur[j + 1] > best.len) {
          best.len = cur[j + 1];
          best.a_pos = i + 1 - best.len;
          best.b_pos = j + 1 - best.len;
        }
      } else {
        cur[j + 1] = 0;
      }
    }
    std::swap(prev, cur);
  }
  return best;
}

inline std::size_t matching_chars(std::string_view a, std::string_view b) {
  const Block blk = longest_common_block(a, b);
  if (blk.len == 0) return 0;
  return blk.len +
         matching_chars(a.substr(0, blk.a_pos), b.substr(0, blk.b_pos)) +
         matching_chars(a.substr(blk.a_pos + blk.len),
                        b.substr(blk.b_pos + blk.len));
}

}  // namespace matching_detail

inline double ratcliff_obershelp(std::string_view a, std::string_view b) {
  if (a.empty() && b.empty()) return 1.0;
  if (a.empty() || b.empty()) return 0.0;
  // The leftmost-longest tie convention is order-sensitive on degenerate
  // inputs; fixing a canonical argument order makes the score symmetric.
  if (b.size() < a.size() || (b.size() == a.size() && b < a)) std::swap(a, b);
  const double m =
      static_cast<double>(matching_detail::matching_chars(a, b));
  return 2.0 * m / static_cast<double>(a.size() + b.size());
}

// Drops parentheticals and anything after an em/en dash or spaced hyphen,
// the "extraneous information" models like to attach to university names.
inline std::string strip_extraneous(std::string_view name) {
  std::string out;
  out.reserve(name.size());
  int depth = 0;
  for (std::size_t i = 0; i < name.size(); ++i) {
    const char c = name[i];
    if (c == '(') {
      ++depth;
      continue;
    }
    if (c == ')') {
      if (depth > 0) --depth;
      continue;
    }
    if (depth > 0) continue;
    // em dash U+2014 and en dash U+2013 in UTF-8
    if (i + 2 < name.size() && static_cast<unsigned char>(c) == 0xe2 &&
        static_cast<unsigned char>(name[i + 1]) == 0x80 &&
        (static_cast<unsigned char>(name[i + 2]) == 0x94 ||
         static_cast<unsigned char>(name[i + 2]) == 0x93)) {
      break;
    }
    if (c == '-' && i > 0 && name[i - 1] == ' ') break;
    if (c == '-' && i + 1 < name.size() && name[i + 1] == '-') break;
    out.push_back(c);
  }
  return text::collapse_whitespace(out);
}

// lowercase, collapse whitespace, strip punctuation except internal hyphens
inline std::string normalize_name(std::string_view name) {
  std::string out;
  out.reserve(name.size());
  for (std::size_t i = 0; i < name.size(); ++i) {
    const char c = name[i];
    if (std::isalnum(static_cast<unsigned char>(c)) || c == ' ') {
      out.push_back(
          static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (c == '-' && i > 0 && i + 1 < name.size() &&
               text::is_word_char(name[i - 1]) &&
               text::is_word_char(name[i + 1])) {
      out.push_back('-');
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      out.push_back(' ');
    }
    // other punctuation dropped
  }
  return text::collapse_whitespace(out);
}

namespace matching_detail {

// Ambiguity resolution everywhere: keep the candidate with the largest
// total population.
inline const DemographicEntity* largest(
    const std::vector<const DemographicEntity*>& candidates) {
  const DemographicEntity* best = nullptr;
  for (const auto* e : candidates) {
    if (!best || e->total_population > best->total_population) best = e;
  }
  return best;
}

}  // namespace matching_detail

// Three-stage cascade: exact (case-insensitive), stripped, alias table.
// Later stages run only when earlier ones found nothing.
inline ResolutionResult match_university(const std::string& name,
                                         const DemographicStore& store) {
  ResolutionResult result;
  result.query_name = name;
  const std::string query = text::trim(name);
  if (query.empty()) return result;

  std::vector<const DemographicEntity*> hits;

  // stage 1: exact
  for (const auto& e : store.entities()) {
    if (text::iequals(query, e.canonical_name)) hits.push_back(&e);
  }
  if (!hits.empty()) {
    result.entity_id = matching_detail::largest(hits)->id;
    result.method = MatchMethod::Exact;
    return result;
  }

  // stage 2: strip extraneous info from both sides
  const std::string stripped_query = strip_extraneous(query);
  if (!stripped_query.empty()) {
    for (const auto& e : store.entities()) {
      if (text::iequals(stripped_query, e.canonical_name) ||
          text::iequals(stripped_query, strip_extraneous(e.canonical_name)))
        hits.push_back(&e);
    }
    if (!hits.empty()) {
      result.entity_id = matching_detail::largest(hits)->id;
      result.method = MatchMethod::Stripped;
      return result;
    }
  }

  // stage 3: alias table
  const auto& aliases = store.alias_index();
  for (const std::string& key :
       {text::to_lower(query), text::to_lower(stripped_query)}) {
    auto [lo, hi] = aliases.equal_range(key);
    for (auto it = lo; it != hi; ++it)
      hits.push_back(&store.entities()[it->second]);
    if (!hits.empty()) break;
  }
  if (!hits.empty()) {
    result.entity_id = matching_detail::largest(hits)->id;
    result.method = MatchMethod::Alias;
    return result;
  }

  return result;  // Unresolved
}

// Strips qualifiers after a comma (boroughs etc.), then fuzzy-matches the
// normalized name against every neighborhood in the city. Sub-threshold
// best matches stay Unresolved so they can be reviewed instead of silently
// polluting shares.
inline ResolutionResult match_neighborhood(
    const std::string& name, City city, const DemographicStore& store,
    double threshold = kDefaultFuzzyThreshold) {
  ResolutionResult result;
  result.query_name = name;
  std::string query = text::trim(name);
  const auto comma = query.find(',');
  if (comma != std::string::npos) query = text::trim(query.substr(0, comma));
  const std::string norm_query = normalize_name(query);
  if (norm_query.empty()) return result;

  const DemographicEntity* best = nullptr;
  double best_sim = -1.0;
  for (const auto* e : store.in_city(city)) {
    const double sim =
        ratcliff_obershelp(norm_query, normalize_name(e->canonical_name));
    if (sim > best_sim ||
        (sim == best_sim && best && e->canonical_name < best->canonical_name)) {
      best_sim = sim;
      best = e;
    }
  }
  if (!best) return result;
  result.similarity = best_sim;
  if (best_sim < threshold) return result;  // Unresolved, similarity logged
  result.entity_id = best->id;
  result.method =
      best_sim == 1.0 ? MatchMethod::Exact : MatchMethod::Fuzzy;
  return result;
}

}  // namespace recaudit::stores
