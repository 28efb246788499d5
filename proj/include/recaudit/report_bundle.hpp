#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "recaudit/analysis.hpp"
#include "recaudit/audit_record.hpp"
#include "recaudit/core.hpp"
#include "recaudit/experiment_config.hpp"
#include "recaudit/orchestrator.hpp"

namespace recaudit::report {

enum class Format { Csv, Json, Text };

inline std::optional<Format> format_from_string(std::string_view s) {
  if (s == "csv") return Format::Csv;
  if (s == "json") return Format::Json;
  if (s == "text") return Format::Text;
  return std::nullopt;
}

struct FailureSummary {
  std::size_t records_total = 0;
  std::size_t records_ok = 0;
  std::size_t parse_failures = 0;
  std::size_t transport_errors = 0;
  std::size_t cache_misses = 0;
  std::size_t unresolved_entities = 0;
  std::size_t resolved_entities = 0;
  std::size_t unparseable_acknowledgments = 0;
};

struct ReportBundle {
  std::string config_digest;
  std::uint64_t seed = 0;
  std::vector<std::string> backends;
  std::string harness_version{kVersion};

  std::vector<audit::AlignmentBySignalRow> alignment_by_signal;
  std::vector<audit::ObfuscationRow> obfuscation;
  std::vector<audit::AckRateRow> acknowledgment_rates;
  std::vector<audit::BaselineGapRow> baseline_gap;
  std::vector<audit::DiversityRow> diversity;
  std::vector<audit::TermAssociationRow> term_association;
  bool has_diversity = false;
  FailureSummary failures;
};

namespace report_detail {

// 12 significant digits everywhere a number is rendered; lossless for the
// bundle's purposes and stable across runs.
inline std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

inline std::string opt_fmt(const std::optional<double>& v) {
  return v ? fmt(*v) : "NA";
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  return out + "\"";
}

}  // namespace report_detail

// Gathers every analysis table plus the failure ledger for one results
// store. Term filters are derived from the run's own templates, lexicon,
// slot domains, entity names, and stopword list.
inline ReportBundle assemble_bundle(
    const std::vector<audit::AuditRecord>& records,
    const audit::ExperimentConfig& config,
    const audit::ExperimentAssets& assets) {
  if (records.empty())
    throw ConfigError("assemble_bundle: results store is empty");

  ReportBundle bundle;
  bundle.config_digest = config.digest();
  bundle.seed = config.seed;
  for (const auto& b : config.backends) bundle.backends.push_back(b.name);

  audit::AlphaLevels alphas;
  if (config.alpha_levels.size() >= 1) alphas.low = config.alpha_levels[0];
  if (config.alpha_levels.size() >= 2) alphas.high = config.alpha_levels[1];

  bundle.alignment_by_signal =
      audit::build_alignment_by_signal(records, alphas, config.min_cell);
  bundle.obfuscation = audit::build_obfuscation_table(
      records, alphas, config.min_cell, config.condition_obfuscation_on_signal);
  bundle.acknowledgment_rates = audit::build_acknowledgment_rates(records);
  bundle.baseline_gap = audit::build_baseline_gap(records);

  bool any_explicit_neighborhood = false;
  for (const auto& r : records) {
    if (r.ok() && r.spec.task == Task::Neighborhood &&
        r.spec.signal == SignalKind::Explicit && !r.resolutions.empty())
      any_explicit_neighborhood = true;
  }
  if (any_explicit_neighborhood) {
    bundle.diversity = audit::build_diversity_report(
        records, assets.neighborhoods, config.cities);
    bundle.has_diversity = true;
  }

  metrics::TermFilters filters;
  filters.stopwords = assets.stopwords;
  filters.min_count = config.term_min_count;
  auto add_tokens = [&](std::set<std::string>& dst, const std::string& s) {
    for (auto& t : metrics::tokenize(s)) dst.insert(std::move(t));
  };
  for (const auto* tpl :
       {&assets.university_template, &assets.neighborhood_template}) {
    std::function<void(const prompts::Segment&)> walk =
        [&](const prompts::Segment& seg) {
          if (seg.kind == prompts::Segment::Kind::Literal)
            add_tokens(filters.query_tokens, seg.text);
          for (const auto& child : seg.children) walk(child);
        };
    for (const auto& seg : tpl->segments) walk(seg);
    add_tokens(filters.query_tokens, tpl->format_instruction);
  }
  for (const auto& [anchor, surface] : assets.lexicons.neutral_rewrites)
    add_tokens(filters.query_tokens, surface);
  for (const auto& [slot, values] : assets.lexicons.neutral_entities)
    for (const auto& v : values) add_tokens(filters.query_tokens, v);
  for (const auto& [race, rl] : assets.lexicons.races) {
    for (const auto& [anchor, surface] : rl.dialect_rewrites)
      add_tokens(filters.query_tokens, surface);
    for (const auto& [slot, values] : rl.entities)
      for (const auto& v : values) add_tokens(filters.query_tokens, v);
  }
  for (const auto& [slot, domain] : assets.slot_domains.domains) {
    for (const auto& v : domain.values) add_tokens(filters.query_tokens, v);
    for (const auto& [city, values] : domain.per_city)
      for (const auto& v : values) add_tokens(filters.query_tokens, v);
  }
  add_tokens(filters.query_tokens, std::string(kSecondTurnProbe));
  for (RaceGroup g : kAllRaces)
    add_tokens(filters.query_tokens, explicit_disclosure_sentence(g));
  for (const auto* store : {&assets.universities, &assets.neighborhoods}) {
    for (const auto& e : store->entities()) {
      add_tokens(filters.entity_tokens, e.canonical_name);
      for (const auto& a : e.aliases) add_tokens(filters.entity_tokens, a);
    }
  }
  for (City c : kAllCities)
    add_tokens(filters.entity_tokens, std::string(city_name(c)));

  bundle.term_association =
      audit::build_term_association(records, filters, config.term_top_k);

  FailureSummary& f = bundle.failures;
  f.records_total = records.size();
  for (const auto& r : records) {
    if (r.ok()) ++f.records_ok;
    if (r.failure_class == "parse_error") ++f.parse_failures;
    if (r.failure_class == "transport_error") ++f.transport_errors;
    if (r.failure_class == "cache_miss") ++f.cache_misses;
    f.unresolved_entities += static_cast<std::size_t>(r.unresolved_count);
    f.resolved_entities += static_cast<std::size_t>(r.resolved_count);
    if (r.acknowledgment &&
        *r.acknowledgment == parsers::Verdict::Unparseable)
      ++f.unparseable_acknowledgments;
  }
  return bundle;
}

// ---- JSON rendering -----------------------------------------------------

inline nlohmann::json bundle_to_json(const ReportBundle& b) {
  using report_detail::fmt;
  nlohmann::json j;
  j["schema_version"] = 1;
  j["run"] = {{"config_digest", b.config_digest},
              {"seed", b.seed},
              {"backends", b.backends},
              {"harness_version", b.harness_version}};

  auto opt_json = [](const std::optional<double>& v) -> nlohmann::json {
    if (!v) return nullptr;
    return *v;
  };

  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : b.alignment_by_signal) {
    rows.push_back({{"model", r.model},
                    {"task", std::string(to_string(r.task))},
                    {"race", std::string(to_string(r.race))},
                    {"signal", std::string(to_string(r.signal))},
                    {"mean_share", r.mean_share},
                    {"n", r.n},
                    {"delta_vs_baseline", opt_json(r.delta)},
                    {"p", opt_json(r.p)},
                    {"sig_05", r.sig_05},
                    {"sig_0001", r.sig_0001},
                    {"insufficient_n", r.insufficient_n}});
  }
  j["tables"]["alignment_by_signal"] = rows;

  rows = nlohmann::json::array();
  for (const auto& r : b.obfuscation) {
    nlohmann::json row = {{"model", r.model},
                          {"task", std::string(to_string(r.task))},
                          {"race", std::string(to_string(r.race))},
                          {"acknowledgment", r.acknowledgment},
                          {"mean_share", r.mean_share},
                          {"n", r.n},
                          {"delta_vs_baseline", opt_json(r.delta)},
                          {"p", opt_json(r.p)},
                          {"sig_05", r.sig_05},
                          {"sig_0001", r.sig_0001},
                          {"obfuscation", r.obfuscation},
                          {"insufficient_n", r.insufficient_n}};
    if (r.signal) row["signal"] = std::string(to_string(*r.signal));
    rows.push_back(std::move(row));
  }
  j["tables"]["obfuscation"] = rows;

  rows = nlohmann::json::array();
  for (const auto& r : b.acknowledgment_rates) {
    rows.push_back({{"model", r.model},
                    {"task", std::string(to_string(r.task))},
                    {"race", std::string(to_string(r.race))},
                    {"signal", std::string(to_string(r.signal))},
                    {"yes_rate", r.yes_rate},
                    {"n", r.n},
                    {"unparseable", r.unparseable}});
  }
  j["tables"]["acknowledgment_rates"] = rows;

  rows = nlohmann::json::array();
  for (const auto& r : b.baseline_gap) {
    rows.push_back({{"model", r.model},
                    {"task", std::string(to_string(r.task))},
                    {"race", std::string(to_string(r.race))},
                    {"baseline_mean_share", r.baseline_mean_share},
                    {"explicit_mean_share", r.explicit_mean_share},
                    {"delta", r.delta},
                    {"n_baseline", r.n_baseline},
                    {"n_explicit", r.n_explicit}});
  }
  j["tables"]["baseline_gap"] = rows;

  rows = nlohmann::json::array();
  for (const auto& r : b.diversity) {
    rows.push_back({{"model", r.model},
                    {"race", std::string(to_string(r.race))},
                    {"diversity", r.diversity},
                    {"representativeness", r.representativeness},
                    {"coverage", r.coverage},
                    {"n_records", r.n_records}});
  }
  j["tables"]["diversity"] = rows;

  rows = nlohmann::json::array();
  for (const auto& r : b.term_association) {
    rows.push_back({{"model", r.model},
                    {"task", std::string(to_string(r.task))},
                    {"signal", std::string(to_string(r.signal))},
                    {"race", std::string(to_string(r.race))},
                    {"rank", r.rank},
                    {"token", r.token},
                    {"score", r.score},
                    {"count", r.count}});
  }
  j["tables"]["term_association"] = rows;

  j["failures"] = {{"records_total", b.failures.records_total},
                   {"records_ok", b.failures.records_ok},
                   {"parse_failures", b.failures.parse_failures},
                   {"transport_errors", b.failures.transport_errors},
                   {"cache_misses", b.failures.cache_misses},
                   {"unresolved_entities", b.failures.unresolved_entities},
                   {"resolved_entities", b.failures.resolved_entities},
                   {"unparseable_acknowledgments",
                    b.failures.unparseable_acknowledgments}};
  return j;
}

// ---- CSV rendering ------------------------------------------------------

namespace report_detail {

inline void write_lines(const std::filesystem::path& path,
                        const std::vector<std::string>& lines) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  for (const auto& l : lines) out << l << "\n";
}

}  // namespace report_detail

inline std::map<std::string, std::vector<std::string>> bundle_to_csv(
    const ReportBundle& b) {
  using report_detail::csv_field;
  using report_detail::fmt;
  using report_detail::opt_fmt;
  std::map<std::string, std::vector<std::string>> files;

  {
    std::vector<std::string> lines = {
        "model,task,race,signal,mean_share,n,delta_vs_baseline,p,sig_05,"
        "sig_0001"};
    for (const auto& r : b.alignment_by_signal) {
      lines.push_back(csv_field(r.model) + "," +
                      std::string(to_string(r.task)) + "," +
                      std::string(to_string(r.race)) + "," +
                      std::string(to_string(r.signal)) + "," +
                      fmt(r.mean_share) + "," + std::to_string(r.n) + "," +
                      opt_fmt(r.delta) + "," + opt_fmt(r.p) + "," +
                      (r.sig_05 ? "1" : "0") + "," +
                      (r.sig_0001 ? "1" : "0"));
    }
    files["alignment_by_signal"] = std::move(lines);
  }
  {
    std::vector<std::string> lines = {
        "model,task,race,acknowledgment,mean_share,n,delta_vs_baseline,p,"
        "sig_05,sig_0001"};
    for (const auto& r : b.obfuscation) {
      lines.push_back(csv_field(r.model) + "," +
                      std::string(to_string(r.task)) + "," +
                      std::string(to_string(r.race)) + "," +
                      r.acknowledgment + "," + fmt(r.mean_share) + "," +
                      std::to_string(r.n) + "," + opt_fmt(r.delta) + "," +
                      opt_fmt(r.p) + "," + (r.sig_05 ? "1" : "0") + "," +
                      (r.sig_0001 ? "1" : "0"));
    }
    files["obfuscation"] = std::move(lines);
  }
  {
    std::vector<std::string> lines = {
        "model,task,race,signal,yes_rate,n,unparseable"};
    for (const auto& r : b.acknowledgment_rates) {
      lines.push_back(csv_field(r.model) + "," +
                      std::string(to_string(r.task)) + "," +
                      std::string(to_string(r.race)) + "," +
                      std::string(to_string(r.signal)) + "," +
                      fmt(r.yes_rate) + "," + std::to_string(r.n) + "," +
                      std::to_string(r.unparseable));
    }
    files["acknowledgment_rates"] = std::move(lines);
  }
  {
    std::vector<std::string> lines = {
        "model,task,race,baseline_mean_share,explicit_mean_share,delta,"
        "n_baseline,n_explicit"};
    for (const auto& r : b.baseline_gap) {
      lines.push_back(csv_field(r.model) + "," +
                      std::string(to_string(r.task)) + "," +
                      std::string(to_string(r.race)) + "," +
                      fmt(r.baseline_mean_share) + "," +
                      fmt(r.explicit_mean_share) + "," + fmt(r.delta) + "," +
                      std::to_string(r.n_baseline) + "," +
                      std::to_string(r.n_explicit));
    }
    files["baseline_gap"] = std::move(lines);
  }
  {
    std::vector<std::string> lines = {
        "model,race,diversity,representativeness,coverage,n_records"};
    for (const auto& r : b.diversity) {
      lines.push_back(csv_field(r.model) + "," +
                      std::string(to_string(r.race)) + "," +
                      fmt(r.diversity) + "," + fmt(r.representativeness) +
                      "," + fmt(r.coverage) + "," +
                      std::to_string(r.n_records));
    }
    files["diversity"] = std::move(lines);
  }
  {
    std::vector<std::string> lines = {
        "model,task,signal,race,rank,token,score,count"};
    for (const auto& r : b.term_association) {
      lines.push_back(csv_field(r.model) + "," +
                      std::string(to_string(r.task)) + "," +
                      std::string(to_string(r.signal)) + "," +
                      std::string(to_string(r.race)) + "," +
                      std::to_string(r.rank) + "," + csv_field(r.token) +
                      "," + fmt(r.score) + "," + std::to_string(r.count));
    }
    files["term_association"] = std::move(lines);
  }
  {
    std::vector<std::string> lines = {"metric,value"};
    const auto& f = b.failures;
    lines.push_back("records_total," + std::to_string(f.records_total));
    lines.push_back("records_ok," + std::to_string(f.records_ok));
    lines.push_back("parse_failures," + std::to_string(f.parse_failures));
    lines.push_back("transport_errors," +
                    std::to_string(f.transport_errors));
    lines.push_back("cache_misses," + std::to_string(f.cache_misses));
    lines.push_back("unresolved_entities," +
                    std::to_string(f.unresolved_entities));
    lines.push_back("resolved_entities," +
                    std::to_string(f.resolved_entities));
    lines.push_back("unparseable_acknowledgments," +
                    std::to_string(f.unparseable_acknowledgments));
    files["failure_summary"] = std::move(lines);
  }
  return files;
}

// ---- text rendering -----------------------------------------------------

namespace report_detail {

inline std::string pad(const std::string& s, std::size_t width) {
  if (s.size() >= width) return s;
  return s + std::string(width - s.size(), ' ');
}

inline std::string table_text(const std::vector<std::vector<std::string>>& rows) {
  if (rows.empty()) return "";
  std::vector<std::size_t> widths;
  for (const auto& row : rows) {
    if (widths.size() < row.size()) widths.resize(row.size(), 0);
    for (std::size_t i = 0; i < row.size(); ++i)
      widths[i] = std::max(widths[i], row[i].size());
  }
  std::string out;
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      out += pad(row[i], widths[i]);
      if (i + 1 < row.size()) out += "  ";
    }
    out += "\n";
  }
  return out;
}

inline std::string share_with_markers(double share, bool sig05,
                                      bool sig0001) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", share);
  std::string s = buf;
  if (sig0001) s += "**";
  else if (sig05) s += "*";
  return s;
}

}  // namespace report_detail

// Plain-text summary: aligned tables, significance marked * (alpha 0.05)
// and ** (alpha 0.0001). No ANSI color is emitted, so NO_COLOR holds
// trivially.
inline std::string render_text(const ReportBundle& b) {
  using report_detail::share_with_markers;
  using report_detail::table_text;
  std::string out;
  out += "run: config_digest=" + b.config_digest +
         " seed=" + std::to_string(b.seed) + " harness=" + b.harness_version +
         "\n";
  out += "backends:";
  for (const auto& name : b.backends) out += " " + name;
  out += "\n\n";

  out += "== alignment by signal (mean share of user's race) ==\n";
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"model", "task", "race", "signal", "mean_share", "n"});
  for (const auto& r : b.alignment_by_signal) {
    rows.push_back({r.model, std::string(to_string(r.task)),
                    std::string(to_string(r.race)),
                    std::string(to_string(r.signal)),
                    r.insufficient_n
                        ? "insufficient n"
                        : share_with_markers(r.mean_share, r.sig_05,
                                             r.sig_0001),
                    std::to_string(r.n)});
  }
  out += table_text(rows) + "\n";

  out += "== obfuscation (share by acknowledgment; ** = more aligned than "
         "baseline at alpha 0.0001) ==\n";
  rows.clear();
  rows.push_back(
      {"model", "task", "race", "ack", "mean_share", "n", "obfuscation"});
  for (const auto& r : b.obfuscation) {
    rows.push_back({r.model, std::string(to_string(r.task)),
                    std::string(to_string(r.race)), r.acknowledgment,
                    r.insufficient_n
                        ? "insufficient n"
                        : share_with_markers(r.mean_share, r.sig_05,
                                             r.sig_0001),
                    std::to_string(r.n), r.obfuscation ? "FLAG" : ""});
  }
  out += table_text(rows) + "\n";

  out += "== acknowledgment rates (fraction answering yes) ==\n";
  rows.clear();
  rows.push_back({"model", "task", "race", "signal", "yes_rate", "n",
                  "unparseable"});
  for (const auto& r : b.acknowledgment_rates) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", r.yes_rate);
    rows.push_back({r.model, std::string(to_string(r.task)),
                    std::string(to_string(r.race)),
                    std::string(to_string(r.signal)), buf,
                    std::to_string(r.n), std::to_string(r.unparseable)});
  }
  out += table_text(rows) + "\n";

  out += "== baseline gap (explicit minus baseline share) ==\n";
  rows.clear();
  rows.push_back({"model", "task", "race", "baseline", "explicit", "delta"});
  for (const auto& r : b.baseline_gap) {
    char b1[32], b2[32], b3[32];
    std::snprintf(b1, sizeof(b1), "%.4f", r.baseline_mean_share);
    std::snprintf(b2, sizeof(b2), "%.4f", r.explicit_mean_share);
    std::snprintf(b3, sizeof(b3), "%+.4f", r.delta);
    rows.push_back({r.model, std::string(to_string(r.task)),
                    std::string(to_string(r.race)), b1, b2, b3});
  }
  out += table_text(rows) + "\n";

  if (b.has_diversity) {
    out += "== diversity / representativeness / coverage (explicit "
           "neighborhood records) ==\n";
    rows.clear();
    rows.push_back({"model", "race", "diversity", "representativeness",
                    "coverage", "n"});
    for (const auto& r : b.diversity) {
      char d[32], rep[32], cov[32];
      std::snprintf(d, sizeof(d), "%.4f", r.diversity);
      std::snprintf(rep, sizeof(rep), "%.4f", r.representativeness);
      std::snprintf(cov, sizeof(cov), "%.4f", r.coverage);
      rows.push_back({r.model, std::string(to_string(r.race)), d, rep, cov,
                      std::to_string(r.n_records)});
    }
    out += table_text(rows) + "\n";
  }

  if (!b.term_association.empty()) {
    out += "== top associated terms per group ==\n";
    rows.clear();
    rows.push_back(
        {"model", "task", "signal", "race", "rank", "token", "count"});
    for (const auto& r : b.term_association) {
      if (r.rank > 5) continue;  // keep the text summary short
      rows.push_back({r.model, std::string(to_string(r.task)),
                      std::string(to_string(r.signal)),
                      std::string(to_string(r.race)),
                      std::to_string(r.rank), r.token,
                      std::to_string(r.count)});
    }
    out += table_text(rows) + "\n";
  }

  const auto& f = b.failures;
  out += "== failures ==\n";
  out += "records: " + std::to_string(f.records_ok) + "/" +
         std::to_string(f.records_total) + " ok; parse_failures=" +
         std::to_string(f.parse_failures) + " transport_errors=" +
         std::to_string(f.transport_errors) + " cache_misses=" +
         std::to_string(f.cache_misses) + "\n";
  out += "entities: resolved=" + std::to_string(f.resolved_entities) +
         " unresolved=" + std::to_string(f.unresolved_entities) +
         "; unparseable_acknowledgments=" +
         std::to_string(f.unparseable_acknowledgments) + "\n";
  return out;
}

// One file per table in the requested format under out_dir.
inline std::vector<std::filesystem::path> emit_tables(
    const ReportBundle& bundle, Format format,
    const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> written;
  if (format == Format::Csv) {
    for (const auto& [name, lines] : bundle_to_csv(bundle)) {
      const auto path = out_dir / (name + ".csv");
      report_detail::write_lines(path, lines);
      written.push_back(path);
    }
  } else if (format == Format::Json) {
    const auto path = out_dir / "report_bundle.json";
    jsonio::save_file(path, bundle_to_json(bundle));
    written.push_back(path);
  } else {
    const auto path = out_dir / "report.txt";
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << render_text(bundle);
    written.push_back(path);
  }
  return written;
}

}  // namespace recaudit::report
