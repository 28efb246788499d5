#pragma once

#include <algorithm>
#include <chrono>
#include <deque>
#include <filesystem>
#include <functional>
#include <future>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "recaudit/audit_record.hpp"
#include "recaudit/core.hpp"
#include "recaudit/demographic_store.hpp"
#include "recaudit/entity_matching.hpp"
#include "recaudit/experiment_config.hpp"
#include "recaudit/lexicon.hpp"
#include "recaudit/metrics.hpp"
#include "recaudit/model_gateway.hpp"
#include "recaudit/prompt_factory.hpp"
#include "recaudit/response_parser.hpp"
#include "recaudit/term_association.hpp"

namespace recaudit::audit {

// Everything run/analyze needs loaded and cross-validated.
struct ExperimentAssets {
  prompts::PromptTemplate university_template;
  prompts::PromptTemplate neighborhood_template;
  prompts::LexiconSet lexicons;
  prompts::SlotDomains slot_domains;
  stores::DemographicStore universities;
  stores::DemographicStore neighborhoods;
  std::set<std::string> stopwords;

  static ExperimentAssets load(const ExperimentConfig& config) {
    ExperimentAssets a;
    a.university_template = prompts::load_template(
        config.paths.university_template);
    a.neighborhood_template =
        prompts::load_template(config.paths.neighborhood_template);
    if (a.university_template.task != Task::University ||
        a.neighborhood_template.task != Task::Neighborhood)
      throw ConfigError("template files are assigned to the wrong tasks");
    a.lexicons = prompts::load_lexicon(config.paths.lexicon);
    a.slot_domains = prompts::load_slot_domains(config.paths.slot_domains);
    a.universities = stores::DemographicStore::ingest(
        config.paths.universities, Task::University, config.paths.aliases);
    a.neighborhoods = stores::DemographicStore::ingest(
        config.paths.neighborhoods, Task::Neighborhood);
    a.stopwords = metrics::load_stopwords(config.paths.stopwords);

    for (const auto* tpl : {&a.university_template, &a.neighborhood_template}) {
      const auto problems = prompts::validate_lexicon(a.lexicons, *tpl);
      if (!problems.empty()) {
        std::string msg = "lexicon does not fit the templates:";
        for (const auto& p : problems) msg += "\n  - " + p;
        throw DataError(msg);
      }
    }
    return a;
  }

  const prompts::PromptTemplate& tpl(Task task) const {
    return task == Task::University ? university_template
                                    : neighborhood_template;
  }
  const stores::DemographicStore& store(Task task) const {
    return task == Task::University ? universities : neighborhoods;
  }
};

namespace orchestrator_detail {

inline gateway::ModelGateway build_gateway(
    const BackendConfig& backend, const ExperimentAssets& assets,
    const std::shared_ptr<gateway::ReplayCache>& cache) {
  switch (backend.type) {
    case BackendConfig::Type::Synthetic:
      return gateway::ModelGateway::synthetic(gateway::SyntheticModel(
          &assets.universities, &assets.neighborhoods, &assets.lexicons,
          backend.synthetic));
    case BackendConfig::Type::Replay:
      return gateway::ModelGateway::replay(cache);
    case BackendConfig::Type::Http:
      return gateway::ModelGateway::live(backend.http, cache);
  }
  throw ConfigError("unreachable backend type");
}

inline std::string model_id_for(const BackendConfig& backend) {
  if (backend.type == BackendConfig::Type::Synthetic) return backend.name;
  return backend.http.model_id.empty() ? backend.name
                                       : backend.http.model_id;
}

}  // namespace orchestrator_detail

// Runs the full two-turn trial for one spec. Failures come back as a
// classified record, never an exception, so conservation holds: one spec,
// one persisted record.
inline AuditRecord execute_spec(const prompts::QuerySpec& spec,
                                const ExperimentAssets& assets,
                                gateway::ModelGateway& gw,
                                const std::string& backend_name,
                                const std::string& model_id,
                                double fuzzy_threshold) {
  AuditRecord record;
  record.spec = spec;
  record.spec_id = spec.id();
  record.backend = backend_name;

  const auto conv =
      prompts::render_prompt(spec, assets.tpl(spec.task), assets.lexicons);
  record.first_turn = conv.first_turn;
  record.second_turn = conv.second_turn;

  gateway::ChatRequest first;
  first.model_id = model_id;
  first.messages.push_back({gateway::Role::User, conv.first_turn});

  bool offline = gw.offline();
  try {
    const auto reply = gw.chat(first);
    record.first_reply = reply.content;
    offline = reply.backend != gateway::BackendKind::Live;
  } catch (const CacheMissError&) {
    record.failure_class = "cache_miss";
    return record;
  } catch (const TransportError&) {
    record.failure_class = "transport_error";
    return record;
  }
  if (!offline) {
    record.timestamp = std::chrono::duration_cast<std::chrono::seconds>(
                           std::chrono::system_clock::now().time_since_epoch())
                           .count();
  }

  try {
    const auto parsed =
        parsers::parse_recommendations(record.first_reply, spec.task);
    record.parse_mode = parsed.parse_mode;
    record.items = parsed.items;
  } catch (const RecParseError&) {
    record.failure_class = "parse_error";
    return record;  // no second turn after a failed first turn
  }

  const auto& store = assets.store(spec.task);
  std::vector<double> shares_by_group[4];
  for (const auto& item : record.items) {
    stores::ResolutionResult res;
    if (spec.task == Task::University) {
      res = stores::match_university(item.name, store);
    } else {
      res = stores::match_neighborhood(item.name, *spec.city, store,
                                       fuzzy_threshold);
    }
    if (res.resolved()) {
      ++record.resolved_count;
      const auto* entity = store.by_id(res.entity_id);
      for (std::size_t gi = 0; gi < kAllRaces.size(); ++gi)
        shares_by_group[gi].push_back(
            stores::group_share(*entity, kAllRaces[gi]));
    } else {
      ++record.unresolved_count;
    }
    record.resolutions.push_back(std::move(res));
  }
  if (record.resolved_count > 0) {
    for (std::size_t gi = 0; gi < kAllRaces.size(); ++gi)
      record.mean_share[kAllRaces[gi]] =
          metrics::mean_share(shares_by_group[gi]);
  }

  gateway::ChatRequest second = first;
  second.messages.push_back({gateway::Role::Assistant, record.first_reply});
  second.messages.push_back({gateway::Role::User, conv.second_turn});
  try {
    const auto reply = gw.chat(second);
    record.second_reply = reply.content;
  } catch (const CacheMissError&) {
    record.failure_class = "cache_miss";
    return record;
  } catch (const TransportError&) {
    record.failure_class = "transport_error";
    return record;
  }
  record.acknowledgment = parsers::parse_acknowledgment(record.second_reply);
  return record;
}

// Figure-2 pipeline: sample -> converse (two turns) -> parse -> resolve ->
// score -> persist. Resumable: specs already present in the results store
// are skipped.
inline std::filesystem::path run_experiment(const ExperimentConfig& config) {
  config.validate();
  const ExperimentAssets assets = ExperimentAssets::load(config);

  ResultsStore results(config.paths.output_dir);
  std::vector<std::string> backend_names;
  for (const auto& b : config.backends) backend_names.push_back(b.name);
  results.write_meta(config.digest(), config.seed, backend_names);
  const std::set<std::string> done = results.known_ids();

  const bool needs_cache = std::any_of(
      config.backends.begin(), config.backends.end(), [](const auto& b) {
        return b.type != BackendConfig::Type::Synthetic;
      });
  std::shared_ptr<gateway::ReplayCache> cache;
  if (needs_cache)
    cache = std::make_shared<gateway::ReplayCache>(config.paths.cache);

  for (const auto& backend : config.backends) {
    auto gw = orchestrator_detail::build_gateway(backend, assets, cache);
    const std::string model_id = orchestrator_detail::model_id_for(backend);

    for (Task task : config.tasks) {
      const auto sample = prompts::sample_queries(
          assets.tpl(task), assets.lexicons, assets.slot_domains,
          config.cities, config.samples_per_task,
          rng::mix(config.seed,
                   text::fnv1a64(backend.name + "/" +
                                 std::string(to_string(task)))),
          config.races, config.signals, config.output_mode);

      std::vector<const prompts::QuerySpec*> todo;
      for (const auto& spec : sample.specs) {
        if (!done.count(backend.name + "/" + spec.id()))
          todo.push_back(&spec);
      }

      auto process = [&](const prompts::QuerySpec& spec) {
        return execute_spec(spec, assets, gw, backend.name, model_id,
                            config.fuzzy_threshold);
      };

      if (config.workers <= 1) {
        for (const auto* spec : todo) results.append(process(*spec));
      } else {
        // sliding window keeps appends in sampling order
        std::deque<std::future<AuditRecord>> window;
        std::size_t next = 0;
        while (next < todo.size() || !window.empty()) {
          while (next < todo.size() && window.size() < config.workers) {
            window.push_back(std::async(std::launch::async, process,
                                        std::cref(*todo[next])));
            ++next;
          }
          results.append(window.front().get());
          window.pop_front();
        }
      }
    }
  }
  return results.dir();
}

}  // namespace recaudit::audit
