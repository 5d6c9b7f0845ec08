#include "ces/sim/grounding.hpp"

#include "ces/core/text.hpp"

namespace ces {

namespace {

std::string quoted(std::string_view s) { return "'" + std::string(s) + "'"; }

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

// Parses "'X'" at the front of s, advancing past it.
std::optional<std::string> take_quoted(std::string_view& s) {
  if (s.empty() || s.front() != '\'') return std::nullopt;
  const auto end = s.find('\'', 1);
  if (end == std::string_view::npos) return std::nullopt;
  std::string out(s.substr(1, end - 1));
  s.remove_prefix(end + 1);
  return out;
}

}  // namespace

std::string instruction_for(const Action& a, std::string_view label) {
  switch (a.kind) {
    case ActionType::Click: return "Tap " + quoted(label);
    case ActionType::Select: return "Select " + quoted(label);
    case ActionType::LongPress: return "Long-press " + quoted(label);
    case ActionType::TypeText:
      return "Type " + quoted(a.input_text.value_or("")) + " into " + quoted(label);
    case ActionType::Scroll:
      return "Scroll " + std::string(to_string(a.direction.value_or(Direction::Down)));
    case ActionType::Enter: return "Press enter";
    case ActionType::PressHome: return "Go to the home screen";
    case ActionType::PressBack: return "Go back";
    case ActionType::Complete: return "Mark the task as complete";
    case ActionType::Close: return "Close the task";
  }
  return "Mark the task as complete";
}

std::string verb_for(const Action& a, std::string_view label) {
  switch (a.kind) {
    case ActionType::Click: return "tapped " + quoted(label);
    case ActionType::Select: return "selected " + quoted(label);
    case ActionType::LongPress: return "long-pressed " + quoted(label);
    case ActionType::TypeText: return "typed " + quoted(a.input_text.value_or(""));
    case ActionType::Scroll:
      return "scrolled " + std::string(to_string(a.direction.value_or(Direction::Down)));
    case ActionType::Enter: return "pressed enter";
    case ActionType::PressHome: return "pressed home";
    case ActionType::PressBack: return "pressed back";
    case ActionType::Complete: return "marked the task complete";
    case ActionType::Close: return "closed the task";
  }
  return "";
}

std::optional<Action> ground_instruction(std::string_view instruction, const Observation& obs) {
  std::string_view s = text::trim(instruction);
  auto element_action = [&](std::string_view prefix, ActionType kind) -> std::optional<Action> {
    std::string_view rest = s.substr(prefix.size());
    auto label = take_quoted(rest);
    if (!label || !text::is_blank(rest)) return std::nullopt;
    const UiElement* el = obs.find_label(*label);
    if (!el) return std::nullopt;
    const Point c = el->bbox.center();
    return Action{kind, c, {}, {}};
  };
  if (starts_with(s, "Tap ")) return element_action("Tap ", ActionType::Click);
  if (starts_with(s, "Select ")) return element_action("Select ", ActionType::Select);
  if (starts_with(s, "Long-press ")) return element_action("Long-press ", ActionType::LongPress);
  if (starts_with(s, "Type ")) {
    std::string_view rest = s.substr(5);
    auto typed = take_quoted(rest);
    if (!typed || !starts_with(rest, " into ")) return std::nullopt;
    rest.remove_prefix(6);
    auto field = take_quoted(rest);
    if (!field || !text::is_blank(rest) || !obs.find_label(*field)) return std::nullopt;
    return Action::type_text(*typed);
  }
  if (starts_with(s, "Scroll ")) {
    auto d = direction_from_string(s.substr(7));
    if (!d) return std::nullopt;
    return Action::scroll(*d);
  }
  if (s == "Press enter") return Action::simple(ActionType::Enter);
  if (s == "Go to the home screen") return Action::simple(ActionType::PressHome);
  if (s == "Go back") return Action::simple(ActionType::PressBack);
  if (s == "Mark the task as complete") return Action::simple(ActionType::Complete);
  if (s == "Close the task") return Action::simple(ActionType::Close);
  return std::nullopt;
}

}  // namespace ces
