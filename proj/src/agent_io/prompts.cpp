#include "ces/agent_io/prompts.hpp"

#include <algorithm>
#include <cctype>

#include "ces/core/error.hpp"
#include "ces/core/serialize.hpp"

namespace ces {

namespace {

constexpr std::string_view kCoordinatorText =
    "You are a GUI task coordinator Agent. Your role is to actively collaborate with the Executor "
    "Agent to complete complex GUI navigation tasks. Given a high-level task description and the "
    "current state of the task, your goal is to provide a clear and precise fine-grained "
    "instruction for the Executor Agent to help accomplish the task.\n"
    "\n"
    "Screenshot: <image>\n"
    "\n"
    "High-level task: {high_level_instruction}\n"
    "\n"
    "Current_state: {current_state}\n"
    "\n"
    "First, think step-by-step. Put your reasoning within <think> tags.\n"
    "After your reasoning, provide the instruction within <answer> tags.\n";

constexpr std::string_view kExecutorText =
    "You are GUI executor Agent, a reasoning GUI Agent Assistant. In this UI screenshot <image>, "
    "I want you to execute the command '{instruction}'.\n"
    "Please provide the action to perform (enumerate from [complete, close, press home, click, "
    "press back, type, select, scroll, enter]), the point where the cursor is moved to (integer) "
    "if a click is performed, and any input text required to complete the action.\n"
    "\n"
    "Output the thinking process in <think> </think> tags, and the final answer in <answer> "
    "</answer> tags as follows: <think>...</think> <answer>['action': enum[complete, close, press "
    "home, click, press back, type, select, scroll, enter], 'point': [x, y], 'input_text': 'no "
    "input text [default]']</answer>\n";

constexpr std::string_view kStateTrackerText =
    "You are a GUI task State Tracker Agent. Your core function is dynamic context compression "
    "and state updating. You will receive the high-level user instruction, the previous task "
    "state (a summary of progress up to the last step), and the latest output of executor agent. "
    "Your task is to generate the new task state. This should be a high-semantic natural language "
    "summary that updates the previous state based on the latest action, maintaining a coherent "
    "record of the task's progress.\n"
    "\n"
    "High-level user instruction: {high_level_instruction}\n"
    "\n"
    "Latest output of executor agent: {executor_output}\n"
    "\n"
    "Previous Task State: {current_state}\n";

bool is_name_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

bool known_placeholder(std::string_view name) {
  return name == kPhHighLevel || name == kPhCurrentState || name == kPhInstruction ||
         name == kPhExecutorOutput;
}

// Calls on_text(literal) and on_name(placeholder) in order.
template <typename OnText, typename OnName>
void scan(std::string_view text, OnText on_text, OnName on_name) {
  std::size_t i = 0;
  std::size_t lit = 0;
  while (i < text.size()) {
    if (text[i] == '{') {
      std::size_t j = i + 1;
      while (j < text.size() && is_name_char(text[j])) ++j;
      if (j < text.size() && text[j] == '}' && j > i + 1) {
        on_text(text.substr(lit, i - lit));
        on_name(text.substr(i + 1, j - i - 1));
        i = j + 1;
        lit = i;
        continue;
      }
    }
    ++i;
  }
  on_text(text.substr(lit));
}

std::string_view file_name(AgentRole role) {
  switch (role) {
    case AgentRole::Coordinator: return "coordinator.txt";
    case AgentRole::Executor: return "executor.txt";
    case AgentRole::StateTracker: return "state_tracker.txt";
  }
  return "";
}

}  // namespace

PromptTemplate::PromptTemplate(AgentRole role, std::string text)
    : role_(role), text_(std::move(text)) {
  scan(
      text_, [](std::string_view) {},
      [this](std::string_view name) {
        if (!known_placeholder(name)) {
          throw Error(Errc::UnknownPlaceholder,
                      std::string(to_string(role_)) + " template: unknown placeholder {" +
                          std::string(name) + "}");
        }
        if (std::find(placeholders_.begin(), placeholders_.end(), name) == placeholders_.end()) {
          placeholders_.emplace_back(name);
        }
      });
}

std::string PromptTemplate::render(const Bindings& bindings) const {
  std::string out;
  out.reserve(text_.size() + 256);
  scan(
      text_, [&](std::string_view lit) { out.append(lit); },
      [&](std::string_view name) {
        auto it = bindings.find(name);
        if (it == bindings.end()) {
          throw Error(Errc::UnboundPlaceholder,
                      std::string(to_string(role_)) + " template: {" + std::string(name) +
                          "} is not bound");
        }
        out.append(it->second);
      });
  return out;
}

std::string render_prompt(const PromptTemplate& t, const Bindings& bindings) {
  return t.render(bindings);
}

const PromptTemplate& default_template(AgentRole role) {
  static const PromptTemplate coordinator(AgentRole::Coordinator, std::string(kCoordinatorText));
  static const PromptTemplate executor(AgentRole::Executor, std::string(kExecutorText));
  static const PromptTemplate tracker(AgentRole::StateTracker, std::string(kStateTrackerText));
  switch (role) {
    case AgentRole::Coordinator: return coordinator;
    case AgentRole::Executor: return executor;
    case AgentRole::StateTracker: return tracker;
  }
  return coordinator;
}

const PromptTemplate& PromptSet::get(AgentRole role) const {
  switch (role) {
    case AgentRole::Coordinator: return coordinator;
    case AgentRole::Executor: return executor;
    case AgentRole::StateTracker: return state_tracker;
  }
  return coordinator;
}

PromptSet load_prompt_set(const std::filesystem::path& dir) {
  PromptSet set;
  for (AgentRole role : {AgentRole::Coordinator, AgentRole::Executor, AgentRole::StateTracker}) {
    const auto path = dir / file_name(role);
    if (!std::filesystem::exists(path)) continue;
    PromptTemplate t(role, read_file(path));
    switch (role) {
      case AgentRole::Coordinator: set.coordinator = std::move(t); break;
      case AgentRole::Executor: set.executor = std::move(t); break;
      case AgentRole::StateTracker: set.state_tracker = std::move(t); break;
    }
  }
  return set;
}

}  // namespace ces
