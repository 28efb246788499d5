#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "recaudit/core.hpp"
#include "recaudit/text.hpp"

namespace recaudit::parsers {

enum class ParseMode { StrictJson, RecoveredJson, Freeform };

inline std::string_view to_string(ParseMode m) {
  switch (m) {
    case ParseMode::StrictJson: return "strict_json";
    case ParseMode::RecoveredJson: return "recovered_json";
    case ParseMode::Freeform: return "freeform";
  }
  return "?";
}

inline std::optional<ParseMode> parse_mode_from_string(std::string_view s) {
  if (s == "strict_json") return ParseMode::StrictJson;
  if (s == "recovered_json") return ParseMode::RecoveredJson;
  if (s == "freeform") return ParseMode::Freeform;
  return std::nullopt;
}

struct RecommendationItem {
  std::string name;
  std::string explanation;

  bool operator==(const RecommendationItem&) const = default;
};

struct RecommendationSet {
  std::vector<RecommendationItem> items;
  std::string raw_text;
  ParseMode parse_mode = ParseMode::StrictJson;
};

// Reply schemas vary by model, so the accepted key names are data.
struct ParserOptions {
  std::vector<std::string> university_keys = {"university", "universities",
                                              "college", "colleges"};
  std::vector<std::string> neighborhood_keys = {"neighborhood",
                                                "neighborhoods"};
  std::vector<std::string> explanation_keys = {"explanation", "explanations",
                                               "reason"};
};

enum class Verdict { Yes, No, Unparseable };

inline std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Yes: return "yes";
    case Verdict::No: return "no";
    case Verdict::Unparseable: return "unparseable";
  }
  return "?";
}

inline std::optional<Verdict> verdict_from_string(std::string_view s) {
  if (s == "yes") return Verdict::Yes;
  if (s == "no") return Verdict::No;
  if (s == "unparseable") return Verdict::Unparseable;
  return std::nullopt;
}

namespace parser_detail {

inline std::string clean_name(std::string_view raw) {
  std::string s = text::trim(raw);
  // markdown emphasis and backticks, then stray quote pairs
  while (!s.empty() && (s.front() == '*' || s.front() == '`'))
    s.erase(s.begin());
  while (!s.empty() && (s.back() == '*' || s.back() == '`')) s.pop_back();
  s = text::trim(s);
  while (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                           (s.front() == '\'' && s.back() == '\''))) {
    s = text::trim(s.substr(1, s.size() - 2));
  }
  while (!s.empty() && (s.back() == '.' || s.back() == ':')) s.pop_back();
  return text::trim(s);
}

inline const nlohmann::json* find_key_ci(
    const nlohmann::json& obj, const std::vector<std::string>& keys) {
  if (!obj.is_object()) return nullptr;
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    for (const auto& key : keys) {
      if (text::iequals(it.key(), key)) return &it.value();
    }
  }
  return nullptr;
}

inline bool extract_from_json(const nlohmann::json& j,
                              const std::vector<std::string>& name_keys,
                              const std::vector<std::string>& expl_keys,
                              std::vector<RecommendationItem>& out,
                              int depth = 0) {
  if (j.is_array()) {
    // array of {name, explanation} objects, or of bare name strings
    bool any = false;
    for (const auto& element : j) {
      if (element.is_string()) {
        const std::string name = clean_name(element.get<std::string>());
        if (!name.empty()) {
          out.push_back({name, ""});
          any = true;
        }
      } else if (element.is_object()) {
        const auto* name = find_key_ci(element, name_keys);
        if (!name || !name->is_string()) return false;
        const auto* expl = find_key_ci(element, expl_keys);
        RecommendationItem item;
        item.name = clean_name(name->get<std::string>());
        if (expl && expl->is_string()) item.explanation = expl->get<std::string>();
        if (item.name.empty()) return false;
        out.push_back(std::move(item));
        any = true;
      } else {
        return false;
      }
    }
    return any;
  }
  if (!j.is_object()) return false;

  const auto* named = find_key_ci(j, name_keys);
  if (named) {
    if (named->is_string()) {
      // single recommendation object
      RecommendationItem item;
      item.name = clean_name(named->get<std::string>());
      const auto* expl = find_key_ci(j, expl_keys);
      if (expl && expl->is_string()) item.explanation = expl->get<std::string>();
      if (item.name.empty()) return false;
      out.push_back(std::move(item));
      return true;
    }
    if (named->is_array()) {
      if (!named->empty() && named->front().is_object())
        return extract_from_json(*named, name_keys, expl_keys, out, depth + 1);
      // object of parallel arrays: names plus matching explanations
      const auto* expl = find_key_ci(j, expl_keys);
      bool any = false;
      for (std::size_t i = 0; i < named->size(); ++i) {
        if (!(*named)[i].is_string()) return false;
        RecommendationItem item;
        item.name = clean_name((*named)[i].get<std::string>());
        if (item.name.empty()) return false;
        if (expl && expl->is_array() && i < expl->size() &&
            (*expl)[i].is_string())
          item.explanation = (*expl)[i].get<std::string>();
        out.push_back(std::move(item));
        any = true;
      }
      return any;
    }
    return false;
  }
  // single wrapper key (e.g. {"recommendations": [...]}) -- descend once
  if (depth == 0 && j.size() == 1 &&
      (j.begin().value().is_array() || j.begin().value().is_object()))
    return extract_from_json(j.begin().value(), name_keys, expl_keys, out,
                             depth + 1);
  return false;
}

// first fenced code block, or the first brace/bracket-balanced region
inline std::optional<std::string> embedded_json_block(const std::string& s) {
  const std::size_t fence = s.find("```");
  if (fence != std::string::npos) {
    std::size_t body = s.find('\n', fence);
    if (body != std::string::npos) {
      const std::size_t close = s.find("```", body);
      if (close != std::string::npos)
        return s.substr(body + 1, close - body - 1);
    }
  }
  const std::size_t open = s.find_first_of("[{");
  if (open == std::string::npos) return std::nullopt;
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (c == '\\') ++i;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == '[' || c == '{') ++depth;
    else if (c == ']' || c == '}') {
      --depth;
      if (depth == 0) return s.substr(open, i - open + 1);
    }
  }
  return std::nullopt;
}

// Deterministic free-form extraction: list-marker lines first, then a
// "recommend ..." enumeration sentence.
inline std::vector<RecommendationItem> extract_freeform(
    const std::string& s) {
  std::vector<RecommendationItem> items;
  for (const auto& raw_line : text::split(s, '\n')) {
    std::string line = text::trim(raw_line);
    if (line.empty()) continue;
    // strip list markers: "1.", "1)", "-", "*", "•"
    std::size_t pos = 0;
    bool marked = false;
    if (std::isdigit(static_cast<unsigned char>(line[0]))) {
      std::size_t d = 0;
      while (d < line.size() &&
             std::isdigit(static_cast<unsigned char>(line[d])))
        ++d;
      if (d < line.size() && (line[d] == '.' || line[d] == ')')) {
        pos = d + 1;
        marked = true;
      }
    } else if (line[0] == '-' || line[0] == '*') {
      pos = 1;
      marked = true;
      while (pos < line.size() && line[pos] == '*') ++pos;  // "**bold"
    } else if (line.rfind("\xe2\x80\xa2", 0) == 0) {  // bullet •
      pos = 3;
      marked = true;
    }
    if (!marked) continue;
    std::string rest = text::trim(line.substr(pos));
    if (rest.empty()) continue;
    // split "Name — explanation" / "Name - explanation" / "Name: explanation"
    std::string name = rest, explanation;
    const std::size_t emdash = rest.find("\xe2\x80\x94");
    const std::size_t spaced_dash = rest.find(" - ");
    const std::size_t colon = rest.find(": ");
    std::size_t cut = std::string::npos;
    std::size_t cut_len = 0;
    for (auto [p, l] : {std::pair{emdash, std::size_t{3}},
                        std::pair{spaced_dash, std::size_t{3}},
                        std::pair{colon, std::size_t{2}}}) {
      if (p != std::string::npos && (cut == std::string::npos || p < cut)) {
        cut = p;
        cut_len = l;
      }
    }
    if (cut != std::string::npos) {
      name = rest.substr(0, cut);
      explanation = text::trim(rest.substr(cut + cut_len));
    }
    // bolded "**Name** explanation"
    const std::size_t bold_close = name.find("**");
    if (bold_close != std::string::npos && explanation.empty()) {
      explanation = text::trim(name.substr(bold_close + 2));
      name = name.substr(0, bold_close);
    }
    name = clean_name(name);
    if (!name.empty()) items.push_back({name, explanation});
  }
  if (!items.empty()) return items;

  // prose fallback: enumeration after a recommending verb
  static const char* kLeads[] = {"recommend", "consider", "check out",
                                 "suggest"};
  const std::string lower = text::to_lower(s);
  std::size_t start = std::string::npos;
  for (const char* lead : kLeads) {
    const std::size_t p = lower.find(lead);
    if (p != std::string::npos && (start == std::string::npos || p < start))
      start = p + std::string(lead).size();
  }
  if (start == std::string::npos) return items;
  std::size_t end = s.find_first_of(".!?\n", start);
  if (end == std::string::npos) end = s.size();
  std::string clause = s.substr(start, end - start);
  // drop a leading connective like "ing", ":", "are"
  const std::size_t first_upper = clause.find_first_of(
      "ABCDEFGHIJKLMNOPQRSTUVWXYZ");
  if (first_upper == std::string::npos) return items;
  clause = clause.substr(first_upper);
  // split on commas and "and"
  std::vector<std::string> parts;
  for (auto& piece : text::split(clause, ',')) {
    const std::string lower_piece = text::to_lower(piece);
    const std::size_t and_pos = lower_piece.find(" and ");
    if (and_pos != std::string::npos) {
      parts.push_back(piece.substr(0, and_pos));
      parts.push_back(piece.substr(and_pos + 5));
    } else if (lower_piece.rfind("and ", 0) == 0) {
      parts.push_back(piece.substr(4));
    } else {
      parts.push_back(piece);
    }
  }
  for (auto& part : parts) {
    const std::string name = clean_name(part);
    if (!name.empty()) items.push_back({name, ""});
  }
  return items;
}

}  // namespace parser_detail

// Strict JSON first, recovery of an embedded JSON block second, free-form
// pattern extraction last; parse_mode records which path produced the
// items. An empty extraction is a parse failure, never an empty success.
inline RecommendationSet parse_recommendations(
    const std::string& reply_text, Task task,
    const ParserOptions& options = {}) {
  if (reply_text.empty())
    throw RecParseError("empty reply text", 0, reply_text);
  const auto& name_keys = task == Task::University
                              ? options.university_keys
                              : options.neighborhood_keys;
  RecommendationSet set;
  set.raw_text = reply_text;

  const auto strict =
      nlohmann::json::parse(reply_text, nullptr, /*allow_exceptions=*/false);
  if (!strict.is_discarded() &&
      parser_detail::extract_from_json(strict, name_keys,
                                       options.explanation_keys, set.items)) {
    set.parse_mode = ParseMode::StrictJson;
    return set;
  }
  set.items.clear();

  if (const auto block = parser_detail::embedded_json_block(reply_text)) {
    const auto recovered =
        nlohmann::json::parse(*block, nullptr, /*allow_exceptions=*/false);
    if (!recovered.is_discarded() &&
        parser_detail::extract_from_json(recovered, name_keys,
                                         options.explanation_keys,
                                         set.items)) {
      set.parse_mode = ParseMode::RecoveredJson;
      return set;
    }
    set.items.clear();
  }

  set.items = parser_detail::extract_freeform(reply_text);
  if (!set.items.empty()) {
    set.parse_mode = ParseMode::Freeform;
    return set;
  }
  throw RecParseError("no recommendations could be extracted", 0, reply_text);
}

// Second-turn verdict: JSON {"answer": yes|no} (case-insensitive, fenced
// blocks accepted), else a leading bare yes/no token, else Unparseable.
inline Verdict parse_acknowledgment(const std::string& reply_text) {
  auto verdict_from_answer = [](const nlohmann::json& j) -> std::optional<Verdict> {
    if (!j.is_object()) return std::nullopt;
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!text::iequals(it.key(), "answer")) continue;
      if (!it.value().is_string()) return std::nullopt;
      const std::string v = text::to_lower(it.value().get<std::string>());
      if (v == "yes") return Verdict::Yes;
      if (v == "no") return Verdict::No;
      return std::nullopt;
    }
    return std::nullopt;
  };

  const auto strict =
      nlohmann::json::parse(reply_text, nullptr, /*allow_exceptions=*/false);
  if (!strict.is_discarded()) {
    if (const auto v = verdict_from_answer(strict)) return *v;
  }
  if (const auto block = parser_detail::embedded_json_block(reply_text)) {
    const auto recovered =
        nlohmann::json::parse(*block, nullptr, /*allow_exceptions=*/false);
    if (!recovered.is_discarded()) {
      if (const auto v = verdict_from_answer(recovered)) return *v;
    }
  }
  // leading bare token
  std::size_t i = 0;
  while (i < reply_text.size() &&
         !std::isalnum(static_cast<unsigned char>(reply_text[i])))
    ++i;
  const std::string head = text::to_lower(reply_text.substr(i, 3));
  if (head.rfind("yes", 0) == 0 &&
      (i + 3 >= reply_text.size() || !text::is_word_char(reply_text[i + 3])))
    return Verdict::Yes;
  if (head.rfind("no", 0) == 0 &&
      (i + 2 >= reply_text.size() || !text::is_word_char(reply_text[i + 2])))
    return Verdict::No;
  return Verdict::Unparseable;
}

}  // namespace recaudit::parsers
