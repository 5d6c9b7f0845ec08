#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ces/core/types.hpp"

namespace ces {

// Placeholder names a template may use.
inline constexpr std::string_view kPhHighLevel = "high_level_instruction";
inline constexpr std::string_view kPhCurrentState = "current_state";
inline constexpr std::string_view kPhInstruction = "instruction";
inline constexpr std::string_view kPhExecutorOutput = "executor_output";

using Bindings = std::map<std::string, std::string, std::less<>>;

class PromptTemplate {
 public:
  // Throws Error(UnknownPlaceholder) if the text names anything outside the
  // four known placeholders.
  PromptTemplate(AgentRole role, std::string text);

  AgentRole role() const { return role_; }
  const std::string& text() const { return text_; }
  // Placeholder names in order of first appearance.
  const std::vector<std::string>& placeholders() const { return placeholders_; }

  // Single-pass substitution; substituted values are never re-scanned.
  // Throws Error(UnboundPlaceholder).
  std::string render(const Bindings& bindings) const;

 private:
  AgentRole role_;
  std::string text_;
  std::vector<std::string> placeholders_;
};

std::string render_prompt(const PromptTemplate& t, const Bindings& bindings);

const PromptTemplate& default_template(AgentRole role);

struct PromptSet {
  PromptTemplate coordinator = default_template(AgentRole::Coordinator);
  PromptTemplate executor = default_template(AgentRole::Executor);
  PromptTemplate state_tracker = default_template(AgentRole::StateTracker);

  const PromptTemplate& get(AgentRole role) const;
};

// Reads coordinator.txt / executor.txt / state_tracker.txt from `dir`; any
// missing file falls back to the embedded default.
PromptSet load_prompt_set(const std::filesystem::path& dir);

}  // namespace ces
