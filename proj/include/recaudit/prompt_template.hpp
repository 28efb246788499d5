#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "recaudit/core.hpp"
#include "recaudit/jsonio.hpp"

namespace recaudit::prompts {

// A template is an ordered list of segments. Anchors mark spans where
// dialect variation may be substituted; slots take values from the slot
// domain file; option groups are whole optional sentences, each carrying
// exactly one entity slot whose values come from the lexicon.
struct Segment {
  enum class Kind { Literal, Anchor, Slot, CityRef, ExplicitSentence, Group };

  Kind kind = Kind::Literal;
  std::string text;                // Literal
  std::string name;                // Anchor id / Slot name / Group id
  std::string exclusive;           // Group: groups sharing this key can't co-occur
  std::vector<Segment> children;   // Group contents
};

struct OptionGroupInfo {
  std::string id;
  std::string exclusive;     // exclusion cluster key (defaults to own id)
  std::string entity_slot;   // the one entity slot inside the group
};

struct PromptTemplate {
  Task task = Task::University;
  std::vector<Segment> segments;
  std::string format_instruction;

  // template-order derived views, filled by load_template
  std::vector<std::string> anchors;          // unique, in order of appearance
  std::vector<std::string> mandatory_slots;  // top-level slots, in order
  std::vector<OptionGroupInfo> option_groups;
  bool has_city_ref = false;
  bool has_explicit_sentence = false;
};

namespace template_detail {

inline Segment parse_segment(const nlohmann::json& js, bool inside_group,
                             const std::string& ctx);

inline std::vector<Segment> parse_segments(const nlohmann::json& arr,
                                           bool inside_group,
                                           const std::string& ctx) {
  if (!arr.is_array()) throw ConfigError(ctx + ": segments must be an array");
  std::vector<Segment> out;
  for (const auto& js : arr)
    out.push_back(parse_segment(js, inside_group, ctx));
  return out;
}

inline Segment parse_segment(const nlohmann::json& js, bool inside_group,
                             const std::string& ctx) {
  if (!js.is_object()) throw ConfigError(ctx + ": segment must be an object");
  Segment s;
  if (js.contains("literal")) {
    s.kind = Segment::Kind::Literal;
    s.text = js["literal"].get<std::string>();
  } else if (js.contains("anchor")) {
    s.kind = Segment::Kind::Anchor;
    s.name = js["anchor"].get<std::string>();
  } else if (js.contains("slot")) {
    s.kind = Segment::Kind::Slot;
    s.name = js["slot"].get<std::string>();
  } else if (js.contains("city")) {
    s.kind = Segment::Kind::CityRef;
  } else if (js.contains("explicit_sentence")) {
    s.kind = Segment::Kind::ExplicitSentence;
  } else if (js.contains("optional")) {
    if (inside_group)
      throw ConfigError(ctx + ": nested optional groups are not supported");
    const auto& opt = js["optional"];
    s.kind = Segment::Kind::Group;
    s.name = opt.at("id").get<std::string>();
    s.exclusive = opt.value("exclusive", s.name);
    s.children = parse_segments(opt.at("segments"), true, ctx);
  } else {
    throw ConfigError(ctx + ": unrecognized segment");
  }
  return s;
}

}  // namespace template_detail

inline PromptTemplate load_template(const std::filesystem::path& path) {
  const auto j = jsonio::load_file(path);
  jsonio::check_schema_version(j, 1, "template " + path.string());
  PromptTemplate tpl;
  const auto task = task_from_string(j.value("task", ""));
  if (!task) throw ConfigError("template " + path.string() + ": bad task");
  tpl.task = *task;
  tpl.format_instruction = j.value("format_instruction", "");
  if (tpl.format_instruction.empty())
    throw ConfigError("template " + path.string() +
                      ": missing format_instruction");
  tpl.segments = template_detail::parse_segments(j.at("segments"), false,
                                                 "template " + path.string());

  // derive views
  auto note_anchor = [&](const std::string& a) {
    for (const auto& existing : tpl.anchors)
      if (existing == a) return;
    tpl.anchors.push_back(a);
  };
  for (const auto& seg : tpl.segments) {
    switch (seg.kind) {
      case Segment::Kind::Anchor:
        note_anchor(seg.name);
        break;
      case Segment::Kind::Slot:
        tpl.mandatory_slots.push_back(seg.name);
        break;
      case Segment::Kind::CityRef:
        tpl.has_city_ref = true;
        break;
      case Segment::Kind::ExplicitSentence:
        tpl.has_explicit_sentence = true;
        break;
      case Segment::Kind::Group: {
        OptionGroupInfo info;
        info.id = seg.name;
        info.exclusive = seg.exclusive;
        for (const auto& child : seg.children) {
          if (child.kind == Segment::Kind::Anchor) note_anchor(child.name);
          if (child.kind == Segment::Kind::Slot) {
            if (!info.entity_slot.empty())
              throw ConfigError("template " + path.string() + ": group '" +
                                info.id + "' has more than one slot");
            info.entity_slot = child.name;
          }
        }
        if (info.entity_slot.empty())
          throw ConfigError("template " + path.string() + ": group '" +
                            info.id + "' has no entity slot");
        tpl.option_groups.push_back(std::move(info));
        break;
      }
      default:
        break;
    }
  }
  // groups that bind the same slot must exclude each other, or one spec
  // could assign two values to one slot
  std::map<std::string, std::string> slot_cluster;
  for (const auto& group : tpl.option_groups) {
    const auto [it, inserted] =
        slot_cluster.emplace(group.entity_slot, group.exclusive);
    if (!inserted && it->second != group.exclusive)
      throw ConfigError("template " + path.string() + ": slot '" +
                        group.entity_slot +
                        "' is used by groups in different exclusion sets");
  }
  if (!tpl.has_explicit_sentence)
    throw ConfigError("template " + path.string() +
                      ": missing explicit_sentence segment");
  if (tpl.task == Task::Neighborhood && !tpl.has_city_ref)
    throw ConfigError("template " + path.string() +
                      ": neighborhood template needs a city segment");
  return tpl;
}

}  // namespace recaudit::prompts
