// recaudit command line: generate / run / analyze / report / validate-data /
// match. Exit codes: 0 success, 1 user error, 2 runtime failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "recaudit/analysis.hpp"
#include "recaudit/core.hpp"
#include "recaudit/entity_matching.hpp"
#include "recaudit/experiment_config.hpp"
#include "recaudit/orchestrator.hpp"
#include "recaudit/prompt_factory.hpp"
#include "recaudit/report_bundle.hpp"

namespace {

using namespace recaudit;

struct CommonOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
};

audit::ExperimentConfig load_config(const CommonOpts& opts) {
  if (opts.config_path.empty())
    throw ConfigError("--config is required for this subcommand");
  auto cfg = audit::ExperimentConfig::load(opts.config_path);
  if (opts.seed) cfg.seed = *opts.seed;
  return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "experiment config file");
  cmd->add_option("--seed", opts.seed, "override the config seed");
  cmd->add_option("--out", opts.out, "output path");
}

int cmd_generate(const CommonOpts& opts, const std::string& task_name,
                 std::uint64_t n) {
  const auto cfg = load_config(opts);
  const auto assets = audit::ExperimentAssets::load(cfg);
  const auto task = task_from_string(task_name);
  if (!task) throw ConfigError("unknown task: " + task_name);

  const auto total = prompts::enumerate_space(
      assets.tpl(*task), assets.lexicons, assets.slot_domains, cfg.cities,
      cfg.races, cfg.signals);
  std::cout << "space_size " << total << "\n";
  if (n == 0) return 0;

  const auto sample = prompts::sample_queries(
      assets.tpl(*task), assets.lexicons, assets.slot_domains, cfg.cities, n,
      cfg.seed, cfg.races, cfg.signals, cfg.output_mode);
  if (sample.with_replacement)
    std::cerr << "note: n exceeds the space size; sampling with replacement"
              << "\n";
  const std::filesystem::path out =
      opts.out.empty() ? std::filesystem::path("specs.jsonl")
                       : std::filesystem::path(opts.out);
  if (out.has_parent_path())
    std::filesystem::create_directories(out.parent_path());
  std::ofstream f(out);
  if (!f) throw ConfigError("cannot write " + out.string());
  for (const auto& spec : sample.specs) f << spec.to_json().dump() << "\n";
  std::cout << "wrote " << sample.specs.size() << " specs to " << out.string()
            << "\n";
  return 0;
}

int cmd_run(const CommonOpts& opts) {
  auto cfg = load_config(opts);
  if (!opts.out.empty()) cfg.paths.output_dir = opts.out;
  const auto dir = audit::run_experiment(cfg);
  std::cout << "results " << dir.string() << "\n";
  return 0;
}

report::ReportBundle analyze_store(const audit::ExperimentConfig& cfg,
                                   const std::filesystem::path& results_dir) {
  const auto assets = audit::ExperimentAssets::load(cfg);
  audit::ResultsStore store(results_dir);
  const auto records = store.load_all();
  if (records.empty())
    throw ConfigError("results store is empty: " + results_dir.string());
  auto bundle = report::assemble_bundle(records, cfg, assets);
  const auto meta = store.read_meta();
  const std::string executed = meta.value("config_digest", "");
  if (!executed.empty() && executed != bundle.config_digest) {
    std::cerr << "warning: analyzing with a different config than the run "
                 "(digest "
              << bundle.config_digest << " vs executed " << executed
              << "); the bundle records the executed digest\n";
  }
  if (!executed.empty()) bundle.config_digest = executed;
  bundle.seed = meta.value("seed", bundle.seed);
  return bundle;
}

int cmd_analyze(const CommonOpts& opts, const std::string& results) {
  const auto cfg = load_config(opts);
  const std::filesystem::path results_dir =
      results.empty() ? cfg.paths.output_dir
                      : std::filesystem::path(results);
  const auto bundle = analyze_store(cfg, results_dir);
  const std::filesystem::path out =
      opts.out.empty() ? results_dir / "report_bundle.json"
                       : std::filesystem::path(opts.out);
  jsonio::save_file(out, report::bundle_to_json(bundle));
  std::cout << "bundle " << out.string() << "\n";
  return 0;
}

int cmd_report(const CommonOpts& opts, const std::string& results,
               std::vector<std::string> formats) {
  const auto cfg = load_config(opts);
  const std::filesystem::path results_dir =
      results.empty() ? cfg.paths.output_dir
                      : std::filesystem::path(results);
  const auto bundle = analyze_store(cfg, results_dir);
  const std::filesystem::path out_dir =
      opts.out.empty() ? results_dir / "tables"
                       : std::filesystem::path(opts.out);
  if (formats.empty()) formats = {"csv", "json", "text"};
  for (const auto& f : formats) {
    const auto format = report::format_from_string(f);
    if (!format) throw ConfigError("unknown format: " + f);
    for (const auto& path : report::emit_tables(bundle, *format, out_dir))
      std::cout << "wrote " << path.string() << "\n";
  }
  return 0;
}

int cmd_validate(const CommonOpts& opts) {
  const auto cfg = load_config(opts);
  cfg.validate();
  std::vector<std::string> problems;
  try {
    const auto assets = audit::ExperimentAssets::load(cfg);
    for (Task task : {Task::University, Task::Neighborhood}) {
      const auto total = prompts::enumerate_space(
          assets.tpl(task), assets.lexicons, assets.slot_domains, cfg.cities,
          cfg.races, cfg.signals);
      std::cout << "ok " << to_string(task) << " space_size " << total
                << "\n";
    }
    std::cout << "ok universities " << assets.universities.entities().size()
              << " entities\n";
    std::cout << "ok neighborhoods "
              << assets.neighborhoods.entities().size() << " entities\n";
    std::cout << "ok stopwords " << assets.stopwords.size() << " words\n";
  } catch (const Error& e) {
    std::cerr << "invalid: " << e.what() << "\n";
    return 1;
  }
  std::cout << "all data files validate\n";
  return 0;
}

int cmd_match(const CommonOpts& opts, const std::string& kind_name,
              const std::string& name, const std::string& city_name_arg,
              double threshold) {
  const auto cfg = load_config(opts);
  const auto kind = task_from_string(kind_name);
  if (!kind) throw ConfigError("unknown kind: " + kind_name);
  stores::ResolutionResult res;
  if (*kind == Task::University) {
    const auto store = stores::DemographicStore::ingest(
        cfg.paths.universities, Task::University, cfg.paths.aliases);
    res = stores::match_university(name, store);
  } else {
    if (city_name_arg.empty())
      throw ConfigError("--city is required for neighborhood matching");
    const auto city = city_from_string(city_name_arg);
    if (!city) throw ConfigError("unknown city: " + city_name_arg);
    const auto store = stores::DemographicStore::ingest(
        cfg.paths.neighborhoods, Task::Neighborhood);
    res = stores::match_neighborhood(name, *city, store, threshold);
  }
  nlohmann::json j;
  j["query_name"] = res.query_name;
  j["resolved"] = res.resolved();
  if (res.resolved()) {
    j["entity_id"] = res.entity_id;
    j["method"] = std::string(stores::to_string(*res.method));
  }
  if (res.similarity) j["similarity"] = *res.similarity;
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"recaudit: batch audit harness measuring demographic bias and "
               "transparency in conversational recommendation models"};
  app.require_subcommand(1);

  CommonOpts gen_opts, run_opts, analyze_opts, report_opts, validate_opts,
      match_opts;

  auto* generate =
      app.add_subcommand("generate", "enumerate or sample query specs");
  add_common(generate, gen_opts);
  std::string gen_task = "university";
  std::uint64_t gen_n = 0;
  generate->add_option("--task", gen_task, "university or neighborhood");
  generate->add_option("--n", gen_n, "sample size (0: just print the count)");

  auto* run = app.add_subcommand("run", "execute the configured experiment");
  add_common(run, run_opts);

  auto* analyze =
      app.add_subcommand("analyze", "build analysis tables from a results store");
  add_common(analyze, analyze_opts);
  std::string analyze_results;
  analyze->add_option("--results", analyze_results,
                      "results directory (default: config output_dir)");

  auto* report_cmd =
      app.add_subcommand("report", "render report tables to csv/json/text");
  add_common(report_cmd, report_opts);
  std::string report_results;
  std::vector<std::string> report_formats;
  report_cmd->add_option("--results", report_results,
                         "results directory (default: config output_dir)");
  report_cmd->add_option("--format", report_formats,
                         "csv, json, text (repeatable; default all)");

  auto* validate = app.add_subcommand(
      "validate-data", "schema-check datasets, lexicons, and templates");
  add_common(validate, validate_opts);

  auto* match = app.add_subcommand(
      "match", "resolve one name against the demographic datasets");
  add_common(match, match_opts);
  std::string match_kind = "university", match_name, match_city;
  double match_threshold = stores::kDefaultFuzzyThreshold;
  match->add_option("--kind", match_kind, "university or neighborhood");
  match->add_option("--name", match_name, "name to resolve")->required();
  match->add_option("--city", match_city, "city for neighborhood matching");
  match->add_option("--threshold", match_threshold,
                    "fuzzy similarity threshold");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help
      return app.exit(e);
    }
    std::cerr << e.what() << "\n" << app.help() << "\n";
    return 1;
  }

  try {
    if (generate->parsed()) return cmd_generate(gen_opts, gen_task, gen_n);
    if (run->parsed()) return cmd_run(run_opts);
    if (analyze->parsed()) return cmd_analyze(analyze_opts, analyze_results);
    if (report_cmd->parsed())
      return cmd_report(report_opts, report_results, report_formats);
    if (validate->parsed()) return cmd_validate(validate_opts);
    if (match->parsed())
      return cmd_match(match_opts, match_kind, match_name, match_city,
                       match_threshold);
    std::cerr << app.help() << "\n";
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << "\n";
    return 2;
  }
}
