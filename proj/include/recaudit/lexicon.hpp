#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "recaudit/core.hpp"
#include "recaudit/jsonio.hpp"
#include "recaudit/prompt_template.hpp"
#include "recaudit/text.hpp"

namespace recaudit::prompts {

// Race-linked surface material. dialect_rewrites holds only anchors whose
// surface differs from the neutral rewrite; anchors not listed fall back
// to neutral.
struct RaceLexicon {
  std::map<std::string, std::string> dialect_rewrites;        // anchor -> text
  std::map<std::string, std::vector<std::string>> entities;   // slot -> values
};

struct LexiconSet {
  std::map<std::string, std::string> neutral_rewrites;
  std::map<std::string, std::vector<std::string>> neutral_entities;
  std::map<RaceGroup, RaceLexicon> races;

  const RaceLexicon& for_race(RaceGroup g) const {
    const auto it = races.find(g);
    if (it == races.end())
      throw DataError(std::string("lexicon missing race ") +
                      std::string(to_string(g)));
    return it->second;
  }

  // Every string whose presence in a prompt marks the given race: dialect
  // surfaces plus race-linked entities.
  std::vector<std::string> race_linked_strings(RaceGroup g) const {
    std::vector<std::string> out;
    const auto it = races.find(g);
    if (it == races.end()) return out;
    for (const auto& [anchor, surface] : it->second.dialect_rewrites)
      out.push_back(surface);
    for (const auto& [slot, values] : it->second.entities)
      for (const auto& v : values) out.push_back(v);
    return out;
  }
};

inline LexiconSet load_lexicon(const std::filesystem::path& path) {
  const auto j = jsonio::load_file(path);
  jsonio::check_schema_version(j, 1, "lexicon " + path.string());
  LexiconSet lex;
  const auto& neutral = j.at("neutral");
  if (neutral.contains("rewrites"))
    lex.neutral_rewrites =
        neutral["rewrites"].get<std::map<std::string, std::string>>();
  if (neutral.contains("entities"))
    lex.neutral_entities =
        neutral["entities"]
            .get<std::map<std::string, std::vector<std::string>>>();
  if (!j.contains("races") || !j["races"].is_object())
    throw ConfigError("lexicon " + path.string() + ": missing races object");
  for (const auto& [race_name, body] : j["races"].items()) {
    const auto race = race_from_string(race_name);
    if (!race)
      throw ConfigError("lexicon " + path.string() + ": unknown race '" +
                        race_name + "'");
    RaceLexicon rl;
    if (body.contains("dialect_rewrites"))
      rl.dialect_rewrites =
          body["dialect_rewrites"].get<std::map<std::string, std::string>>();
    if (body.contains("entities"))
      rl.entities =
          body["entities"]
              .get<std::map<std::string, std::vector<std::string>>>();
    lex.races[*race] = std::move(rl);
  }

  // enforced filter: no race-linked entity string may name a race
  for (const auto& [race, rl] : lex.races) {
    for (const auto& [slot, values] : rl.entities) {
      for (const auto& v : values) {
        for (RaceGroup g : kAllRaces) {
          if (text::contains_ci(v, to_string(g)))
            throw DataError("lexicon entity '" + v +
                            "' contains a race name");
        }
      }
    }
  }
  return lex;
}

// Cross-checks a lexicon against a template (and optionally the baseline
// material). Returns a list of human-readable problems; empty means valid.
inline std::vector<std::string> validate_lexicon(
    const LexiconSet& lex, const PromptTemplate& tpl) {
  std::vector<std::string> problems;
  for (const auto& anchor : tpl.anchors) {
    if (!lex.neutral_rewrites.count(anchor))
      problems.push_back("anchor '" + anchor + "' has no neutral rewrite");
  }
  for (const auto& group : tpl.option_groups) {
    const auto it = lex.neutral_entities.find(group.entity_slot);
    if (it == lex.neutral_entities.end() || it->second.empty())
      problems.push_back("entity slot '" + group.entity_slot +
                         "' has no neutral entities");
  }
  for (RaceGroup g : kAllRaces) {
    const auto it = lex.races.find(g);
    if (it == lex.races.end()) {
      problems.push_back(std::string("missing race lexicon for ") +
                         std::string(to_string(g)));
      continue;
    }
    bool any_differs = false;
    for (const auto& [anchor, surface] : it->second.dialect_rewrites) {
      const auto nit = lex.neutral_rewrites.find(anchor);
      if (nit == lex.neutral_rewrites.end()) {
        problems.push_back("dialect rewrite for unknown anchor '" + anchor +
                           "'");
        continue;
      }
      if (nit->second == surface)
        problems.push_back("dialect rewrite for '" + anchor + "' (" +
                           std::string(to_string(g)) +
                           ") equals the neutral rewrite");
      else
        any_differs = true;
    }
    if (!any_differs)
      problems.push_back(std::string(to_string(g)) +
                         ": no dialect rewrite differs from neutral");
    for (const auto& group : tpl.option_groups) {
      const auto eit = it->second.entities.find(group.entity_slot);
      if (eit == it->second.entities.end() || eit->second.empty())
        problems.push_back(std::string(to_string(g)) +
                           ": no entities for slot '" + group.entity_slot +
                           "'");
    }
  }

  // race-linked strings must be distinct across races (detection relies
  // on a surface string mapping back to exactly one race)
  std::map<std::string, RaceGroup> seen;
  for (RaceGroup g : kAllRaces) {
    for (const auto& s : lex.race_linked_strings(g)) {
      const std::string key = text::to_lower(s);
      const auto [it, inserted] = seen.emplace(key, g);
      if (!inserted && it->second != g)
        problems.push_back("race-linked string '" + s +
                           "' appears for more than one race");
    }
  }
  return problems;
}

// True when the text contains any race-linked surface string from any
// race's lexicon (word-bounded, case-insensitive). Baseline prompts must
// scan clean.
inline bool contains_race_linked_string(std::string_view prompt,
                                        const LexiconSet& lex) {
  for (RaceGroup g : kAllRaces) {
    for (const auto& s : lex.race_linked_strings(g)) {
      if (text::contains_word_bounded(prompt, s)) return true;
    }
  }
  return false;
}

}  // namespace recaudit::prompts
