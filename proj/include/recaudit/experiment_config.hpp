#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "recaudit/core.hpp"
#include "recaudit/http_backend.hpp"
#include "recaudit/jsonio.hpp"
#include "recaudit/synthetic_model.hpp"
#include "recaudit/text.hpp"

namespace recaudit::audit {

struct BackendConfig {
  enum class Type { Synthetic, Http, Replay };
  Type type = Type::Synthetic;
  std::string name;
  gateway::SyntheticModelConfig synthetic;
  gateway::HttpBackendConfig http;
};

struct ExperimentPaths {
  std::filesystem::path university_template;
  std::filesystem::path neighborhood_template;
  std::filesystem::path lexicon;
  std::filesystem::path slot_domains;
  std::filesystem::path universities;
  std::filesystem::path neighborhoods;
  std::optional<std::filesystem::path> aliases;
  std::filesystem::path stopwords;
  std::filesystem::path cache;
  std::filesystem::path output_dir;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::uint64_t samples_per_task = 160;  // per backend, per task
  std::vector<Task> tasks = {Task::University, Task::Neighborhood};
  std::vector<City> cities = {City::NewYorkCity, City::LosAngeles,
                              City::Chicago};
  std::vector<RaceGroup> races = {kAllRaces.begin(), kAllRaces.end()};
  std::vector<SignalKind> signals = {kAllSignals.begin(), kAllSignals.end()};
  OutputMode output_mode = OutputMode::ConstrainedJson;
  std::vector<double> alpha_levels = {0.05, 0.0001};
  std::size_t min_cell = 16;
  bool condition_obfuscation_on_signal = false;
  std::uint64_t term_min_count = 10;
  std::size_t term_top_k = 20;
  double fuzzy_threshold = 0.6;
  std::size_t workers = 1;
  std::vector<BackendConfig> backends;
  ExperimentPaths paths;

  nlohmann::json raw;  // the file as loaded; digested for traceability

  std::string digest() const { return text::hex64(text::fnv1a64(raw.dump())); }

  static ExperimentConfig load(const std::filesystem::path& path);
  void validate() const;
};

inline ExperimentConfig ExperimentConfig::load(
    const std::filesystem::path& path) {
  const auto j = jsonio::load_file(path);
  jsonio::check_schema_version(j, 1, "experiment config " + path.string());
  ExperimentConfig cfg;
  cfg.raw = j;
  cfg.seed = j.value("seed", std::uint64_t{0});
  cfg.samples_per_task = j.value("samples_per_task", std::uint64_t{160});

  if (j.contains("tasks")) {
    cfg.tasks.clear();
    for (const auto& t : j["tasks"]) {
      const auto task = task_from_string(t.get<std::string>());
      if (!task) throw ConfigError("config: unknown task " + t.dump());
      cfg.tasks.push_back(*task);
    }
  }
  if (j.contains("cities")) {
    cfg.cities.clear();
    for (const auto& c : j["cities"]) {
      const auto city = city_from_string(c.get<std::string>());
      if (!city) throw ConfigError("config: unknown city " + c.dump());
      cfg.cities.push_back(*city);
    }
  }
  if (j.contains("races")) {
    cfg.races.clear();
    for (const auto& r : j["races"]) {
      const auto race = race_from_string(r.get<std::string>());
      if (!race) throw ConfigError("config: unknown race " + r.dump());
      cfg.races.push_back(*race);
    }
  }
  if (j.contains("signals")) {
    cfg.signals.clear();
    for (const auto& s : j["signals"]) {
      const auto sig = signal_from_string(s.get<std::string>());
      if (!sig) throw ConfigError("config: unknown signal " + s.dump());
      cfg.signals.push_back(*sig);
    }
  }
  if (j.contains("output_mode")) {
    const auto m = output_mode_from_string(j["output_mode"].get<std::string>());
    if (!m) throw ConfigError("config: unknown output_mode");
    cfg.output_mode = *m;
  }
  if (j.contains("alpha_levels"))
    cfg.alpha_levels = j["alpha_levels"].get<std::vector<double>>();
  cfg.min_cell = j.value("min_cell", std::size_t{16});
  cfg.condition_obfuscation_on_signal =
      j.value("condition_obfuscation_on_signal", false);
  cfg.term_min_count = j.value("term_min_count", std::uint64_t{10});
  cfg.term_top_k = j.value("term_top_k", std::size_t{20});
  cfg.fuzzy_threshold = j.value("fuzzy_threshold", 0.6);
  cfg.workers = j.value("workers", std::size_t{1});

  if (!j.contains("backends") || !j["backends"].is_array() ||
      j["backends"].empty())
    throw ConfigError("config: at least one backend is required");
  for (const auto& jb : j["backends"]) {
    BackendConfig b;
    b.name = jb.value("name", "");
    if (b.name.empty()) throw ConfigError("config: backend without a name");
    const std::string type = jb.value("type", "");
    if (type == "synthetic") {
      b.type = BackendConfig::Type::Synthetic;
      b.synthetic.bias_strength = jb.value("bias_strength", 0.0);
      b.synthetic.top_k = jb.value("top_k", 5);
      b.synthetic.seed = jb.value("seed", cfg.seed);
      const auto policy = gateway::ack_policy_from_string(
          jb.value("acknowledgment_policy", "honest"));
      if (!policy)
        throw ConfigError("config: unknown acknowledgment_policy");
      b.synthetic.ack_policy = *policy;
      if (jb.contains("marker_vocab")) {
        b.synthetic.marker_vocab.clear();
        for (const auto& [race_str, words] : jb["marker_vocab"].items()) {
          const auto race = race_from_string(race_str);
          if (!race) throw ConfigError("config: marker_vocab race unknown");
          b.synthetic.marker_vocab[*race] =
              words.get<std::vector<std::string>>();
        }
      }
      if (jb.contains("neutral_markers"))
        b.synthetic.neutral_markers =
            jb["neutral_markers"].get<std::vector<std::string>>();
    } else if (type == "http") {
      b.type = BackendConfig::Type::Http;
      b.http.name = b.name;
      b.http.base_url = jb.value("base_url", "");
      if (b.http.base_url.empty())
        throw ConfigError("config: http backend needs base_url");
      b.http.model_id = jb.value("model_id", "");
      b.http.auth_env = jb.value("auth_env", "");
      b.http.endpoint_path =
          jb.value("endpoint_path", std::string("/v1/chat/completions"));
      b.http.requests_per_second = jb.value("requests_per_second", 1.0);
      b.http.max_retries = jb.value("max_retries", 3);
      b.http.backoff_initial_s = jb.value("backoff_initial_s", 1.0);
    } else if (type == "replay") {
      b.type = BackendConfig::Type::Replay;
      // requests must reproduce the recorded digests byte for byte
      b.http.model_id = jb.value("model_id", b.name);
    } else {
      throw ConfigError("config: unknown backend type '" + type + "'");
    }
    cfg.backends.push_back(std::move(b));
  }

  if (!j.contains("paths") || !j["paths"].is_object())
    throw ConfigError("config: missing paths object");
  const auto& jp = j["paths"];
  const auto base = path.parent_path();
  auto resolve = [&](const std::string& key) -> std::filesystem::path {
    if (!jp.contains(key))
      throw ConfigError("config: paths." + key + " is required");
    std::filesystem::path p = jp[key].get<std::string>();
    return p.is_absolute() ? p : base / p;
  };
  cfg.paths.university_template = resolve("university_template");
  cfg.paths.neighborhood_template = resolve("neighborhood_template");
  cfg.paths.lexicon = resolve("lexicon");
  cfg.paths.slot_domains = resolve("slot_domains");
  cfg.paths.universities = resolve("universities");
  cfg.paths.neighborhoods = resolve("neighborhoods");
  if (jp.contains("aliases")) cfg.paths.aliases = resolve("aliases");
  cfg.paths.stopwords = resolve("stopwords");
  cfg.paths.cache = resolve("cache");
  cfg.paths.output_dir = resolve("output_dir");
  return cfg;
}

inline void ExperimentConfig::validate() const {
  if (tasks.empty()) throw ConfigError("config: no tasks configured");
  if (races.empty()) throw ConfigError("config: no races configured");
  if (signals.empty()) throw ConfigError("config: no signals configured");
  if (samples_per_task == 0)
    throw ConfigError("config: samples_per_task must be positive");
  if (std::find(tasks.begin(), tasks.end(), Task::Neighborhood) !=
          tasks.end() &&
      cities.empty())
    throw ConfigError("config: neighborhood task needs at least one city");
  for (const auto& p :
       {paths.university_template, paths.neighborhood_template, paths.lexicon,
        paths.slot_domains, paths.universities, paths.neighborhoods,
        paths.stopwords}) {
    if (!std::filesystem::exists(p))
      throw ConfigError("config: missing input file " + p.string());
  }
  if (paths.aliases && !std::filesystem::exists(*paths.aliases))
    throw ConfigError("config: missing alias file " + paths.aliases->string());
}

}  // namespace recaudit::audit
