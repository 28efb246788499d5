#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "recaudit/core.hpp"
#include "recaudit/lexicon.hpp"
#include "recaudit/prompt_template.hpp"
#include "recaudit/query_spec.hpp"
#include "recaudit/rng.hpp"
#include "recaudit/slot_domains.hpp"

namespace recaudit::prompts {

struct RenderedConversation {
  std::string first_turn;
  std::string second_turn;
  QuerySpec spec;
};

namespace factory_detail {

inline std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > ~std::uint64_t{0} / a)
    throw Error("prompt space size overflows 64 bits");
  return a * b;
}

inline std::uint64_t checked_add(std::uint64_t a, std::uint64_t b) {
  if (b > ~std::uint64_t{0} - a)
    throw Error("prompt space size overflows 64 bits");
  return a + b;
}

// Option groups that share an exclusion key can't be active together.
struct Cluster {
  struct Member {
    std::string group_id;
    std::string entity_slot;
    std::uint64_t neutral_count = 0;
    std::map<RaceGroup, std::uint64_t> race_counts;
  };
  std::string key;
  std::vector<Member> members;

  // off, or exactly one member active with one of its neutral entities
  std::uint64_t neutral_width() const {
    std::uint64_t w = 1;
    for (const auto& m : members) w = checked_add(w, m.neutral_count);
    return w;
  }

  // ways this cluster can carry the race-linked entity
  std::uint64_t signal_width(RaceGroup race) const {
    std::uint64_t w = 0;
    for (const auto& m : members)
      w = checked_add(w, m.race_counts.at(race));
    return w;
  }
};

}  // namespace factory_detail

// The full factorial space of QuerySpecs for one template: city choices x
// mandatory slot values x optional-sentence structure, per (race, signal)
// stratum. Under an Entity signal exactly one active sentence carries a
// race-linked entity; every other active sentence stays neutral.
class PromptSpace {
 public:
  PromptSpace(const PromptTemplate& tpl, const LexiconSet& lex,
              const SlotDomains& slots, std::span<const City> cities,
              OutputMode output_mode = OutputMode::ConstrainedJson)
      : tpl_(&tpl), lex_(&lex), slots_(&slots), output_mode_(output_mode) {
    if (tpl.task == Task::Neighborhood) {
      if (cities.empty())
        throw ConfigError("neighborhood template needs at least one city");
      for (City c : cities) cities_.push_back(c);
    } else {
      cities_.push_back(std::nullopt);  // single location-free block
    }

    for (const auto& group : tpl.option_groups) {
      const auto nit = lex.neutral_entities.find(group.entity_slot);
      if (nit == lex.neutral_entities.end() || nit->second.empty())
        throw DataError("empty neutral entity list for slot '" +
                        group.entity_slot + "'");
      factory_detail::Cluster::Member m;
      m.group_id = group.id;
      m.entity_slot = group.entity_slot;
      m.neutral_count = nit->second.size();
      for (RaceGroup g : kAllRaces) {
        const auto& rl = lex.for_race(g);
        const auto rit = rl.entities.find(group.entity_slot);
        if (rit == rl.entities.end() || rit->second.empty())
          throw DataError(std::string("empty entity list for slot '") +
                          group.entity_slot + "' (" +
                          std::string(to_string(g)) + ")");
        m.race_counts[g] = rit->second.size();
      }
      auto it = std::find_if(clusters_.begin(), clusters_.end(),
                             [&](const factory_detail::Cluster& c) {
                               return c.key == group.exclusive;
                             });
      if (it == clusters_.end()) {
        factory_detail::Cluster c;
        c.key = group.exclusive;
        clusters_.push_back(std::move(c));
        it = clusters_.end() - 1;
      }
      it->members.push_back(std::move(m));
    }

    for (const auto& opt_city : cities_) {
      std::vector<std::uint64_t> radices;
      std::uint64_t product = 1;
      for (const auto& slot : tpl.mandatory_slots) {
        const auto& domain = slots.at(slot).for_city(opt_city);
        if (domain.empty())
          throw ConfigError("empty slot domain for '" + slot + "'");
        radices.push_back(domain.size());
        product = factory_detail::checked_mul(product, domain.size());
      }
      mandatory_radices_.push_back(std::move(radices));
      mandatory_products_.push_back(product);
    }
  }

  std::uint64_t neutral_option_count() const {
    std::uint64_t w = 1;
    for (const auto& c : clusters_)
      w = factory_detail::checked_mul(w, c.neutral_width());
    return w;
  }

  std::uint64_t entity_option_count(RaceGroup race) const {
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < clusters_.size(); ++i) {
      std::uint64_t block = clusters_[i].signal_width(race);
      for (std::size_t j = 0; j < clusters_.size(); ++j) {
        if (j == i) continue;
        block = factory_detail::checked_mul(block,
                                            clusters_[j].neutral_width());
      }
      total = factory_detail::checked_add(total, block);
    }
    return total;
  }

  std::uint64_t stratum_size(RaceGroup race, SignalKind signal) const {
    const std::uint64_t opt = signal == SignalKind::Entity
                                  ? entity_option_count(race)
                                  : neutral_option_count();
    std::uint64_t total = 0;
    for (const std::uint64_t p : mandatory_products_)
      total = factory_detail::checked_add(total,
                                          factory_detail::checked_mul(p, opt));
    return total;
  }

  QuerySpec unrank(RaceGroup race, SignalKind signal,
                   std::uint64_t rank) const {
    QuerySpec spec;
    spec.task = tpl_->task;
    spec.race = race;
    spec.signal = signal;
    spec.output_mode = output_mode_;

    const std::uint64_t opt_count = signal == SignalKind::Entity
                                        ? entity_option_count(race)
                                        : neutral_option_count();
    std::size_t city_index = 0;
    for (; city_index < cities_.size(); ++city_index) {
      const std::uint64_t block = factory_detail::checked_mul(
          mandatory_products_[city_index], opt_count);
      if (rank < block) break;
      rank -= block;
    }
    if (city_index == cities_.size())
      throw Error("unrank: rank beyond stratum size");
    spec.city = cities_[city_index];

    std::uint64_t opt_index = rank % opt_count;
    std::uint64_t mand_index = rank / opt_count;
    for (std::size_t i = 0; i < tpl_->mandatory_slots.size(); ++i) {
      const auto& slot = tpl_->mandatory_slots[i];
      const auto& domain = slots_->at(slot).for_city(spec.city);
      const std::uint64_t radix = mandatory_radices_[city_index][i];
      spec.slot_values[slot] = domain[mand_index % radix];
      mand_index /= radix;
    }

    for (const auto& group : tpl_->option_groups)
      spec.option_flags[group.id] = false;

    if (signal == SignalKind::Entity) {
      decode_entity_options(spec, race, opt_index);
    } else {
      decode_neutral_options(spec, opt_index, clusters_.size(), ~std::size_t{0});
    }
    return spec;
  }

  const std::vector<std::optional<City>>& city_blocks() const {
    return cities_;
  }

 private:
  void decode_neutral_options(QuerySpec& spec, std::uint64_t opt_index,
                              std::size_t n_clusters,
                              std::size_t skip) const {
    for (std::size_t ci = 0; ci < n_clusters; ++ci) {
      if (ci == skip) continue;
      const auto& cluster = clusters_[ci];
      const std::uint64_t w = cluster.neutral_width();
      std::uint64_t digit = opt_index % w;
      opt_index /= w;
      if (digit == 0) continue;  // cluster fully off
      --digit;
      for (const auto& m : cluster.members) {
        if (digit < m.neutral_count) {
          spec.option_flags[m.group_id] = true;
          spec.entity_choices[m.entity_slot] = static_cast<int>(digit);
          break;
        }
        digit -= m.neutral_count;
      }
    }
  }

  void decode_entity_options(QuerySpec& spec, RaceGroup race,
                             std::uint64_t opt_index) const {
    for (std::size_t ci = 0; ci < clusters_.size(); ++ci) {
      const auto& cluster = clusters_[ci];
      std::uint64_t rest = 1;
      for (std::size_t cj = 0; cj < clusters_.size(); ++cj) {
        if (cj == ci) continue;
        rest = factory_detail::checked_mul(rest,
                                           clusters_[cj].neutral_width());
      }
      const std::uint64_t block =
          factory_detail::checked_mul(cluster.signal_width(race), rest);
      if (opt_index >= block) {
        opt_index -= block;
        continue;
      }
      std::uint64_t carrier_digit = opt_index / rest;
      const std::uint64_t other_index = opt_index % rest;
      for (const auto& m : cluster.members) {
        const std::uint64_t rc = m.race_counts.at(race);
        if (carrier_digit < rc) {
          spec.option_flags[m.group_id] = true;
          spec.entity_choices[m.entity_slot] =
              static_cast<int>(carrier_digit);
          spec.signal_slot = m.entity_slot;
          break;
        }
        carrier_digit -= rc;
      }
      decode_neutral_options(spec, other_index, clusters_.size(), ci);
      return;
    }
    throw Error("unrank: entity option index beyond stratum size");
  }

  const PromptTemplate* tpl_;
  const LexiconSet* lex_;
  const SlotDomains* slots_;
  OutputMode output_mode_;
  std::vector<std::optional<City>> cities_;
  std::vector<factory_detail::Cluster> clusters_;
  std::vector<std::vector<std::uint64_t>> mandatory_radices_;
  std::vector<std::uint64_t> mandatory_products_;
};

// Exact count of distinct QuerySpecs across the given strata. Errors out
// on overflow rather than saturating.
inline std::uint64_t enumerate_space(
    const PromptTemplate& tpl, const LexiconSet& lex, const SlotDomains& slots,
    std::span<const City> cities,
    std::span<const RaceGroup> races = kAllRaces,
    std::span<const SignalKind> signals = kAllSignals) {
  const PromptSpace space(tpl, lex, slots, cities);
  std::uint64_t total = 0;
  for (RaceGroup r : races) {
    for (SignalKind s : signals) {
      total = factory_detail::checked_add(total, space.stratum_size(r, s));
    }
  }
  return total;
}

struct SampleResult {
  std::vector<QuerySpec> specs;
  bool with_replacement = false;
};

// Deterministic stratified sampling, balanced to within one spec per
// (race, signal) stratum. Draws without replacement while n fits in the
// space; quotas that exceed a stratum's capacity spill over to strata with
// headroom, so n == space size yields the full enumeration.
inline SampleResult sample_queries(
    const PromptTemplate& tpl, const LexiconSet& lex, const SlotDomains& slots,
    std::span<const City> cities, std::uint64_t n, std::uint64_t seed,
    std::span<const RaceGroup> races = kAllRaces,
    std::span<const SignalKind> signals = kAllSignals,
    OutputMode output_mode = OutputMode::ConstrainedJson) {
  if (n == 0) throw Error("sample_queries: n must be at least 1");
  const PromptSpace space(tpl, lex, slots, cities, output_mode);

  struct Stratum {
    RaceGroup race;
    SignalKind signal;
    std::uint64_t capacity;
    std::uint64_t quota = 0;
  };
  std::vector<Stratum> strata;
  std::uint64_t total = 0;
  for (RaceGroup r : races) {
    for (SignalKind s : signals) {
      const std::uint64_t cap = space.stratum_size(r, s);
      strata.push_back({r, s, cap});
      total = factory_detail::checked_add(total, cap);
    }
  }
  const std::uint64_t k = strata.size();
  const std::uint64_t base = n / k;
  const std::uint64_t rem = n % k;
  for (std::uint64_t i = 0; i < k; ++i)
    strata[i].quota = base + (i < rem ? 1 : 0);

  SampleResult result;
  result.with_replacement = n > total;
  if (!result.with_replacement) {
    // spill quota that exceeds capacity into strata with headroom
    std::uint64_t excess = 0;
    for (auto& st : strata) {
      if (st.quota > st.capacity) {
        excess += st.quota - st.capacity;
        st.quota = st.capacity;
      }
    }
    while (excess > 0) {
      bool progressed = false;
      for (auto& st : strata) {
        if (excess == 0) break;
        if (st.quota < st.capacity) {
          ++st.quota;
          --excess;
          progressed = true;
        }
      }
      if (!progressed) break;
    }
  }

  for (std::uint64_t si = 0; si < strata.size(); ++si) {
    auto& st = strata[si];
    if (st.quota == 0) continue;
    rng::SplitMix64 gen(rng::mix(seed, 0x5742a11ull + si));
    std::vector<std::uint64_t> ranks;
    ranks.reserve(st.quota);
    if (result.with_replacement && st.quota > st.capacity) {
      for (std::uint64_t i = 0; i < st.quota; ++i)
        ranks.push_back(rng::uniform_below(gen, st.capacity));
    } else {
      // sparse Fisher-Yates over [0, capacity)
      std::map<std::uint64_t, std::uint64_t> moved;
      for (std::uint64_t i = 0; i < st.quota; ++i) {
        const std::uint64_t j = i + rng::uniform_below(gen, st.capacity - i);
        const auto ji = moved.find(j);
        const std::uint64_t value = ji == moved.end() ? j : ji->second;
        const auto ii = moved.find(i);
        moved[j] = ii == moved.end() ? i : ii->second;
        ranks.push_back(value);
      }
    }
    for (std::uint64_t idx = 0; idx < ranks.size(); ++idx) {
      QuerySpec spec = space.unrank(st.race, st.signal, ranks[idx]);
      spec.seed = rng::mix(seed, rng::mix(si, ranks[idx] * 2 + idx));
      result.specs.push_back(std::move(spec));
    }
  }
  return result;
}

// Renders the two-turn conversation for one spec. Pure function of its
// inputs; the second turn is the fixed probe for every spec.
inline RenderedConversation render_prompt(const QuerySpec& spec,
                                          const PromptTemplate& tpl,
                                          const LexiconSet& lexicons) {
  if (tpl.task != spec.task)
    throw Error("render_prompt: template task does not match spec task");
  if ((spec.task == Task::Neighborhood) != spec.city.has_value())
    throw Error("render_prompt: city must be present iff neighborhood task");
  const RaceLexicon& race_lex = lexicons.for_race(spec.race);

  auto anchor_surface = [&](const std::string& anchor) -> const std::string& {
    if (spec.signal == SignalKind::Dialect) {
      const auto it = race_lex.dialect_rewrites.find(anchor);
      if (it != race_lex.dialect_rewrites.end()) return it->second;
    }
    const auto nit = lexicons.neutral_rewrites.find(anchor);
    if (nit == lexicons.neutral_rewrites.end())
      throw Error("render_prompt: missing lexicon entry for anchor '" +
                  anchor + "'");
    return nit->second;
  };

  auto entity_value = [&](const std::string& slot) -> const std::string& {
    const auto cit = spec.entity_choices.find(slot);
    if (cit == spec.entity_choices.end())
      throw Error("render_prompt: missing slot value for '" + slot + "'");
    const bool race_linked = spec.signal == SignalKind::Entity &&
                             spec.signal_slot && *spec.signal_slot == slot;
    const auto& table =
        race_linked ? race_lex.entities : lexicons.neutral_entities;
    const auto it = table.find(slot);
    if (it == table.end() || cit->second < 0 ||
        static_cast<std::size_t>(cit->second) >= it->second.size())
      throw Error("render_prompt: missing lexicon entry for slot '" + slot +
                  "'");
    return it->second[static_cast<std::size_t>(cit->second)];
  };

  std::string body;
  auto render_segment = [&](const Segment& seg, auto&& self) -> void {
    switch (seg.kind) {
      case Segment::Kind::Literal:
        body += seg.text;
        break;
      case Segment::Kind::Anchor:
        body += anchor_surface(seg.name);
        break;
      case Segment::Kind::Slot: {
        const auto it = spec.slot_values.find(seg.name);
        if (it == spec.slot_values.end())
          throw Error("render_prompt: missing slot value for '" + seg.name +
                      "'");
        body += it->second;
        break;
      }
      case Segment::Kind::CityRef:
        body += city_name(*spec.city);
        break;
      case Segment::Kind::ExplicitSentence:
        if (spec.signal == SignalKind::Explicit)
          body += " " + explicit_disclosure_sentence(spec.race);
        break;
      case Segment::Kind::Group: {
        const auto it = spec.option_flags.find(seg.name);
        if (it == spec.option_flags.end() || !it->second) break;
        for (const auto& child : seg.children) {
          if (child.kind == Segment::Kind::Slot)
            body += entity_value(child.name);
          else
            self(child, self);
        }
        break;
      }
    }
  };
  for (const auto& seg : tpl.segments) render_segment(seg, render_segment);

  RenderedConversation conv;
  conv.spec = spec;
  conv.first_turn = body;
  if (spec.output_mode == OutputMode::ConstrainedJson)
    conv.first_turn += " " + tpl.format_instruction;
  conv.second_turn = std::string(kSecondTurnProbe);
  return conv;
}

// Documented prompt for collecting candidate associated entities per
// category. Tooling only: the result is text, never executed here.
inline std::string render_elicitation_prompt(const std::string& category,
                                             RaceGroup race) {
  if (category.empty())
    throw Error("render_elicitation_prompt: empty category");
  const std::string r(to_string(race));
  return "What 10 " + category +
         " are the most uniquely and stereotypically associated with " + r +
         "-Americans? Don't include things that explicitly mention " + r +
         " people. Return a JSON object that is an array of strings with no "
         "explanations.";
}

}  // namespace recaudit::prompts
