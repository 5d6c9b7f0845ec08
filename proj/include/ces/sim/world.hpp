#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ces/core/serialize.hpp"
#include "ces/core/types.hpp"

namespace ces {

enum class KeyKind { Click, TypeText, Scroll, PressHome, PressBack, Enter, Select };

struct TransitionKey {
  KeyKind kind = KeyKind::Click;
  std::string element_id;  // Click / TypeText / Select
  std::optional<Direction> direction;  // Scroll

  auto operator<=>(const TransitionKey&) const = default;

  static TransitionKey click(std::string id) { return {KeyKind::Click, std::move(id), {}}; }
  static TransitionKey select(std::string id) { return {KeyKind::Select, std::move(id), {}}; }
  static TransitionKey type_into(std::string id) { return {KeyKind::TypeText, std::move(id), {}}; }
  static TransitionKey scroll(Direction d) { return {KeyKind::Scroll, {}, d}; }
  static TransitionKey simple(KeyKind k) { return {k, {}, {}}; }
};

// "click:e3", "type:e1", "scroll:down", "press_home", "press_back", "enter", "select:e4".
std::string to_string(const TransitionKey& key);
TransitionKey transition_key_from_string(std::string_view s);

struct ScreenInfo {
  std::string app;    // empty for the home screen
  std::string title;  // unique across the world
  int depth = 0;
  // Text the task generator types into this screen's input field, if any.
  std::optional<std::string> field_text;
  bool operator==(const ScreenInfo&) const = default;
};

struct World {
  std::uint64_t seed = 0;
  std::string home_screen;
  std::map<std::string, Observation> screens;
  std::map<std::string, ScreenInfo> info;
  std::map<std::pair<std::string, TransitionKey>, std::string> transitions;

  bool operator==(const World&) const = default;

  // Throws Error(UnknownScreen).
  const Observation& screen(const std::string& id) const;
  const ScreenInfo& screen_info(const std::string& id) const;
  // Outgoing (key, target) pairs of a screen in key order. PressHome is
  // implicit and therefore not listed unless stored explicitly.
  std::vector<std::pair<TransitionKey, std::string>> outgoing(const std::string& id) const;
};

void to_json(Json& j, const World& w);
void from_json(const Json& j, World& w);

// Structural violations: dangling targets, missing home, PressHome not
// reaching home, PressBack without a matching forward edge, bad elements.
std::vector<std::string> world_violations(const World& w);

// Parses and validates a world spec; throws Error(InvalidSpec).
World build_world(const Json& spec);

struct WorldParams {
  int screens = 12;
  int branching = 3;
  int elements_per_screen = 8;
  int width = 1080;
  int height = 2400;
};

// Deterministic in (seed, params). At least one screen is reachable from
// home along two distinct shortest paths.
World generate_world(std::uint64_t seed, const WorldParams& params = {});

// Stable 64-bit digest of the serialized world.
std::uint64_t world_fingerprint(const World& w);

struct StepResult {
  std::string next_screen;
  std::string note;  // transition key, "no-op", "complete" or "close"
  bool ended = false;
};

// PressHome always leads home. Click/Select hit-test the point over the
// screen's elements; TypeText targets the screen's input field. Unmatched
// actions are no-ops. Throws Error(UnknownScreen).
StepResult apply_action(const World& w, const std::string& screen_id, const Action& a);

}  // namespace ces
