#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "recaudit/core.hpp"
#include "recaudit/text.hpp"

namespace recaudit::metrics {

struct TermScore {
  std::string token;
  RaceGroup race = RaceGroup::White;
  double score = 0.0;
  std::uint64_t count = 0;
};

struct TermFilters {
  std::set<std::string> stopwords;
  // every token that appears in a query template, rendered lexicon surface,
  // or slot value; such words describe the prompt, not the model
  std::set<std::string> query_tokens;
  // names and locations of resolvable entities
  std::set<std::string> entity_tokens;
  std::uint64_t min_count = 10;  // tokens rarer than this are dropped
};

// lowercase; split on whitespace; strip punctuation except hyphens between
// word characters
inline std::vector<std::string> tokenize(std::string_view input) {
  std::vector<std::string> tokens;
  std::string cur;
  auto flush = [&] {
    // trim leading/trailing hyphens left over from stripping
    std::size_t b = 0, e = cur.size();
    while (b < e && cur[b] == '-') ++b;
    while (e > b && cur[e - 1] == '-') --e;
    if (e > b) tokens.push_back(cur.substr(b, e - b));
    cur.clear();
  };
  for (std::size_t i = 0; i < input.size(); ++i) {
    const char c = input[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      flush();
    } else if (std::isalnum(static_cast<unsigned char>(c))) {
      cur.push_back(
          static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (c == '-') {
      cur.push_back('-');
    } else if (c == '\'') {
      // keep contractions together (don't -> dont)
    }
    // all other punctuation is a no-op, effectively stripped
  }
  flush();
  return tokens;
}

namespace term_detail {

// Additive smoothing term damping tokens that only ever occur for a single
// group. With T_g the group's (filtered) vocabulary and N_g its token
// count, the term reduces to lambda / (|T_g| * sum_r |T_r|); the arithmetic
// below is kept unsimplified and isolated here so the reading can be
// swapped in one place.
inline double smoothing_term(double lambda, double vocab_g, double tokens_g,
                             double total_vocab) {
  if (vocab_g <= 0.0 || tokens_g <= 0.0 || total_vocab <= 0.0) return 0.0;
  return (lambda / (vocab_g * tokens_g)) * (tokens_g / total_vocab);
}

}  // namespace term_detail

inline constexpr double kTermSmoothingLambda = 0.3;

struct TermAssociationResult {
  // per race, ranked best-first, at most top_k entries
  std::map<RaceGroup, std::vector<TermScore>> ranked;
  // unsmoothed share of a token's occurrences belonging to each race
  std::map<std::string, std::map<RaceGroup, double>> base_scores;
};

// Scores each surviving token by the share of its occurrences that belong
// to each group, plus a per-group smoothing term. Ties break by raw count,
// then lexicographically.
inline TermAssociationResult term_association(
    const std::map<RaceGroup, std::vector<std::string>>& corpus_tokens,
    const TermFilters& filters, double lambda = kTermSmoothingLambda,
    std::size_t top_k = 20) {
  if (corpus_tokens.empty())
    throw Error("term_association: no corpora given");
  for (const auto& [g, tokens] : corpus_tokens) {
    if (tokens.empty())
      throw Error(std::string("term_association: empty corpus for ") +
                  std::string(to_string(g)));
  }

  std::map<std::string, std::map<RaceGroup, std::uint64_t>> counts;
  std::map<std::string, std::uint64_t> totals;
  for (const auto& [race, tokens] : corpus_tokens) {
    for (const auto& tok : tokens) {
      counts[tok][race] += 1;
      totals[tok] += 1;
    }
  }

  auto keep = [&](const std::string& tok) {
    if (totals[tok] < filters.min_count) return false;
    if (filters.stopwords.count(tok)) return false;
    if (filters.query_tokens.count(tok)) return false;
    if (filters.entity_tokens.count(tok)) return false;
    return true;
  };

  // vocabulary and token mass per group over surviving tokens
  std::map<RaceGroup, double> vocab_size, token_mass;
  double total_vocab = 0.0;
  for (const auto& [tok, by_race] : counts) {
    if (!keep(tok)) continue;
    for (const auto& [race, c] : by_race) {
      vocab_size[race] += 1.0;
      token_mass[race] += static_cast<double>(c);
    }
  }
  for (const auto& [g, v] : vocab_size) total_vocab += v;

  TermAssociationResult result;
  std::map<RaceGroup, std::vector<TermScore>> all;
  for (const auto& [tok, by_race] : counts) {
    if (!keep(tok)) continue;
    const double denom = static_cast<double>(totals[tok]);
    for (const auto& [g, unused_tokens] : corpus_tokens) {
      (void)unused_tokens;
      const auto it = by_race.find(g);
      const std::uint64_t c = it == by_race.end() ? 0 : it->second;
      const double base = static_cast<double>(c) / denom;
      result.base_scores[tok][g] = base;
      if (c == 0) continue;
      TermScore ts;
      ts.token = tok;
      ts.race = g;
      ts.count = c;
      ts.score = base + term_detail::smoothing_term(lambda, vocab_size[g],
                                                    token_mass[g], total_vocab);
      all[g].push_back(std::move(ts));
    }
  }

  for (auto& [race, scores] : all) {
    std::sort(scores.begin(), scores.end(),
              [](const TermScore& a, const TermScore& b) {
                if (a.score != b.score) return a.score > b.score;
                if (a.count != b.count) return a.count > b.count;
                return a.token < b.token;
              });
    if (scores.size() > top_k) scores.resize(top_k);
    result.ranked[race] = std::move(scores);
  }
  return result;
}

// Stopword list shipped as a data file, one token per line, '#' comments.
inline std::set<std::string> load_stopwords(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open stopword file: " + path.string());
  std::set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    const std::string w = text::trim(line);
    if (w.empty() || w[0] == '#') continue;
    words.insert(text::to_lower(w));
  }
  return words;
}

}  // namespace recaudit::metrics
