#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "recaudit/chat.hpp"
#include "recaudit/core.hpp"
#include "recaudit/demographic_store.hpp"
#include "recaudit/lexicon.hpp"
#include "recaudit/rng.hpp"
#include "recaudit/text.hpp"

namespace recaudit::gateway {

enum class AckPolicy { Honest, AlwaysDeny, AlwaysAdmit };

inline std::string_view to_string(AckPolicy p) {
  switch (p) {
    case AckPolicy::Honest: return "honest";
    case AckPolicy::AlwaysDeny: return "always_deny";
    case AckPolicy::AlwaysAdmit: return "always_admit";
  }
  return "?";
}

inline std::optional<AckPolicy> ack_policy_from_string(std::string_view s) {
  if (s == "honest") return AckPolicy::Honest;
  if (s == "always_deny") return AckPolicy::AlwaysDeny;
  if (s == "always_admit") return AckPolicy::AlwaysAdmit;
  return std::nullopt;
}

struct SyntheticModelConfig {
  double bias_strength = 0.0;  // 0 means race-blind sampling
  int top_k = 5;
  AckPolicy ack_policy = AckPolicy::Honest;
  std::uint64_t seed = 0;
  // marker tokens planted into explanations so downstream term-association
  // analysis has a known ground truth; deliberately meaningless codes
  std::map<RaceGroup, std::vector<std::string>> marker_vocab = {
      {RaceGroup::White, {"alpha-coded"}},
      {RaceGroup::Black, {"beta-coded"}},
      {RaceGroup::Hispanic, {"gamma-coded"}},
      {RaceGroup::Asian, {"delta-coded"}},
  };
  std::vector<std::string> neutral_markers = {"omega-coded"};
};

// Built-in recommender with tunable bias. Knows the lexicons, so it can
// detect the identity signal a prompt carries; recommendation sampling
// then weights entities by exp(bias_strength * group_share). Serves as the
// ground-truth oracle for the end-to-end analyses.
class SyntheticModel {
 public:
  SyntheticModel(const stores::DemographicStore* universities,
                 const stores::DemographicStore* neighborhoods,
                 const prompts::LexiconSet* lexicons,
                 SyntheticModelConfig config)
      : universities_(universities),
        neighborhoods_(neighborhoods),
        lexicons_(lexicons),
        config_(std::move(config)) {}

  struct DetectedSignal {
    SignalKind kind = SignalKind::None;
    std::optional<RaceGroup> race;
  };

  DetectedSignal detect_signal(std::string_view first_turn) const {
    for (RaceGroup g : kAllRaces) {
      if (first_turn.find(explicit_disclosure_sentence(g)) !=
          std::string_view::npos)
        return {SignalKind::Explicit, g};
    }
    for (RaceGroup g : kAllRaces) {
      const auto it = lexicons_->races.find(g);
      if (it == lexicons_->races.end()) continue;
      for (const auto& [anchor, surface] : it->second.dialect_rewrites) {
        if (text::contains_word_bounded(first_turn, surface))
          return {SignalKind::Dialect, g};
      }
    }
    for (RaceGroup g : kAllRaces) {
      const auto it = lexicons_->races.find(g);
      if (it == lexicons_->races.end()) continue;
      for (const auto& [slot, values] : it->second.entities) {
        for (const auto& v : values) {
          if (text::contains_word_bounded(first_turn, v))
            return {SignalKind::Entity, g};
        }
      }
    }
    return {};
  }

  ChatResponse chat(const ChatRequest& request) {
    if (request.messages.empty() ||
        request.messages.front().role != Role::User)
      throw Error("synthetic_chat: conversation must start with a user turn");
    const std::string& first_turn = request.messages.front().content;
    const std::string req_digest = digest(request);
    rng::SplitMix64 gen(rng::mix(config_.seed, text::fnv1a64(req_digest)));

    ChatResponse response;
    response.backend = BackendKind::Synthetic;
    response.request_digest = req_digest;

    const bool second_turn =
        request.messages.size() >= 3 &&
        request.messages.back().role == Role::User &&
        request.messages.back().content == kSecondTurnProbe;
    const DetectedSignal sig = detect_signal(first_turn);
    if (second_turn) {
      response.content = answer_probe(sig);
      return response;
    }

    const Task task = infer_task(first_turn);
    const std::optional<City> city =
        task == Task::Neighborhood ? infer_city(first_turn) : std::nullopt;
    std::vector<const stores::DemographicEntity*> pool;
    if (task == Task::University) {
      for (const auto& e : universities_->entities()) pool.push_back(&e);
    } else {
      if (!city)
        throw Error("synthetic_chat: no known city in neighborhood prompt");
      pool = neighborhoods_->in_city(*city);
    }
    if (pool.empty())
      throw Error("synthetic_chat: store has no entities for this request");

    const bool biased =
        sig.kind != SignalKind::None && config_.bias_strength != 0.0;
    std::vector<double> weights(pool.size(), 1.0);
    if (biased) {
      for (std::size_t i = 0; i < pool.size(); ++i)
        weights[i] = std::exp(config_.bias_strength *
                              stores::group_share(*pool[i], *sig.race));
    }

    const std::size_t k =
        std::min<std::size_t>(static_cast<std::size_t>(config_.top_k),
                              pool.size());
    nlohmann::json items = nlohmann::json::array();
    const std::string key =
        task == Task::University ? "university" : "neighborhood";
    for (std::size_t pick = 0; pick < k; ++pick) {
      double total = 0.0;
      for (std::size_t i = 0; i < pool.size(); ++i)
        if (pool[i]) total += weights[i];
      double r = rng::uniform01(gen) * total;
      std::size_t chosen = pool.size();
      for (std::size_t i = 0; i < pool.size(); ++i) {
        if (!pool[i]) continue;
        r -= weights[i];
        if (r <= 0.0) {
          chosen = i;
          break;
        }
      }
      if (chosen == pool.size()) {  // numeric edge: take the last live one
        for (std::size_t i = pool.size(); i-- > 0;) {
          if (pool[i]) {
            chosen = i;
            break;
          }
        }
      }
      const auto* entity = pool[chosen];
      pool[chosen] = nullptr;  // without replacement
      nlohmann::json item;
      item[key] = entity->canonical_name;
      item["explanation"] = explanation_for(*entity, sig, gen);
      items.push_back(std::move(item));
    }
    response.content = items.dump();
    return response;
  }

  const SyntheticModelConfig& config() const { return config_; }

 private:
  std::string answer_probe(const DetectedSignal& sig) const {
    bool yes = false;
    switch (config_.ack_policy) {
      case AckPolicy::Honest:
        yes = sig.kind != SignalKind::None && config_.bias_strength != 0.0;
        break;
      case AckPolicy::AlwaysDeny:
        yes = false;
        break;
      case AckPolicy::AlwaysAdmit:
        yes = true;
        break;
    }
    nlohmann::json j;
    j["answer"] = yes ? "yes" : "no";
    return j.dump();
  }

  Task infer_task(std::string_view first_turn) const {
    return infer_city(first_turn) ? Task::Neighborhood : Task::University;
  }

  std::optional<City> infer_city(std::string_view first_turn) const {
    for (City c : kAllCities) {
      if (first_turn.find(city_name(c)) != std::string_view::npos) return c;
    }
    return std::nullopt;
  }

  std::string explanation_for(const stores::DemographicEntity& entity,
                              const DetectedSignal& sig,
                              rng::SplitMix64& gen) const {
    const std::vector<std::string>* markers = &config_.neutral_markers;
    if (sig.kind != SignalKind::None && sig.race) {
      const auto it = config_.marker_vocab.find(*sig.race);
      if (it != config_.marker_vocab.end() && !it->second.empty())
        markers = &it->second;
    }
    std::string marker = "suitable";
    if (!markers->empty())
      marker = (*markers)[rng::uniform_below(gen, markers->size())];
    return entity.canonical_name + " is a " + marker +
           " option that fits what you described.";
  }

  const stores::DemographicStore* universities_;
  const stores::DemographicStore* neighborhoods_;
  const prompts::LexiconSet* lexicons_;
  SyntheticModelConfig config_;
};

}  // namespace recaudit::gateway
