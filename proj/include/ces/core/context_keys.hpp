#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace ces {

// Lookup keys shared by scripted tables and toy policies. Fields are joined
// with the ASCII unit separator; a trailing field of "*" is a wildcard.
inline constexpr char kKeySeparator = '\x1f';
inline constexpr std::string_view kWildcard = "*";

std::string make_key(const std::vector<std::string_view>& fields);
std::vector<std::string> split_key(std::string_view key);
// Same key with its last field replaced by the wildcard.
std::string wildcard_key(std::string_view key);

// Coordinator decides from (q, current screen, state or history text).
std::string coordinator_key(std::string_view instruction, std::string_view screen_id,
                            std::string_view context);
// Executor sees only the atomic instruction and the current screen.
std::string executor_key(std::string_view atomic_instruction, std::string_view screen_id);
// State tracker sees (q, previous state, raw executor output).
std::string tracker_key(std::string_view instruction, std::string_view prev_state,
                        std::string_view executor_output);

}  // namespace ces
