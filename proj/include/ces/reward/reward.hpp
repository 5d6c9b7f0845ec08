#pragma once

#include <optional>
#include <string_view>

#include "ces/core/types.hpp"

namespace ces {

// Token-level F1 over lowercased whitespace tokens (multiset overlap).
// Both empty -> 1, exactly one empty -> 0.
double token_f1(std::string_view pred, std::string_view gt);

int reward_type(const Action& a, const GroundTruthStep& gt);
// 0 when a required ground-truth field is missing (logged at debug level).
int reward_param(const Action& a, const GroundTruthStep& gt, const RewardConfig& cfg = {});
double reward_executor(const Action& a, const GroundTruthStep& gt, const RewardConfig& cfg = {});

// `action` absent means the output did not parse: r_type = r_param = 0.
RewardBreakdown total_reward(std::string_view raw, const std::optional<Action>& action,
                             const GroundTruthStep& gt, const RewardConfig& cfg = {});

// Composition only, for callers that already hold the three indicators.
RewardBreakdown compose_reward(int r_format, int r_type, int r_param, const RewardConfig& cfg);

}  // namespace ces
