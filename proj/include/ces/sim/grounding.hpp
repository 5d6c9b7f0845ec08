#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "ces/core/types.hpp"

namespace ces {

// Atomic instruction phrasing shared by the task generator, the toy
// coordinator and the grounding executor:
//   Tap 'L'   Select 'L'   Long-press 'L'   Type 'text' into 'F'
//   Scroll down   Press enter   Go to the home screen   Go back
//   Mark the task as complete   Close the task
std::string instruction_for(const Action& action, std::string_view label = {});

// Past-tense fragment for state summaries: "tapped 'L'", "pressed home".
std::string verb_for(const Action& action, std::string_view label = {});

// Resolves an instruction against a screen. Element instructions target the
// labelled element's center; nullopt when the phrase or label is unknown.
std::optional<Action> ground_instruction(std::string_view instruction, const Observation& obs);

}  // namespace ces
