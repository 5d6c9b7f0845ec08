#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "ces/core/types.hpp"

namespace ces {

inline constexpr std::string_view kNoInputText = "no input text [default]";

// Parses the executor's answer record, e.g.
//   ['action': 'click', 'point': [520, 1130], 'input_text': 'no input text [default]']
// Brackets or braces are optional, keys may be quoted with ' or " or bare,
// key order is free, and strict JSON objects are accepted too.
// Throws Error(UnknownAction | MalformedRecord | MissingParam | PointOutOfBounds).
Action parse_executor_answer(std::string_view answer, ScreenSize screen = {});
Action parse_executor_answer(std::string_view answer, const Observation& screen);

// Inverse of parse_executor_answer for every valid action.
std::string format_executor_answer(const Action& action);

// Prompt-style action name: "press home", "long press", "type".
std::string_view action_prompt_name(ActionType type);

// Loose action-name lookup: prompt names, wire names, any case, with _ or -
// as separators ("Long-Press", "press_home", "type text").
std::optional<ActionType> parse_action_name(std::string_view name);

// Tags + record in one go; never throws. parse_ok is false when either stage
// fails, with the error recorded.
ExecutorOutput parse_executor_output(std::string_view raw, ScreenSize screen = {});

// Well-formed executor output for `action`, used by scripted executors and
// as the ground-truth u_gt in staged rollouts.
std::string canonical_executor_output(std::string_view instruction, const Action& action);

}  // namespace ces
