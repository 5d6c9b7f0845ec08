#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ces/core/types.hpp"
#include "ces/sim/tasks.hpp"
#include "ces/sim/toy_policy.hpp"
#include "ces/sim/world.hpp"

namespace ces {

// Context key -> raw response text, consumed by scripted backends.
using ScriptTable = std::map<std::string, std::string>;

// Canonical tagged payloads produced by scripted and toy agents.
std::string coordinator_response(std::string_view instruction);
std::string tracker_response(std::string_view state);

// Ground-truth executor output u_gt for a step.
std::string gt_executor_output(const TaskStep& step);

// State-keyed oracle coordinator: (q, screen, gt_state) -> gt instruction.
// With first_visit_fallback, also stores (q, screen, "*") -> the instruction
// given on the first visit to that screen, which is what a coordinator that
// cannot tell visits apart would repeat.
ScriptTable oracle_coordinator_table(const std::vector<TaskRecord>& tasks,
                                     bool first_visit_fallback = true);

// (q, gt_state_t, u_gt_t) -> gt_state_{t+1}, including the final state.
ScriptTable oracle_tracker_table(const std::vector<TaskRecord>& tasks);

// Every instruction the grounding executor understands on every screen:
// element taps/selects/long-presses, typing the known texts into fields,
// scrolls, enter, home, back, complete and close.
std::vector<std::string> instruction_vocabulary(const World& w, const Observation& obs);
ScriptTable grounding_executor_table(const World& w);

// Toy coordinator: one context per task step keyed (q, screen, gt_state),
// the gt instruction plus k-1 distractors, uniform logits.
ToyPolicy build_toy_coordinator(const World& w, const std::vector<TaskRecord>& tasks, int k,
                                std::uint64_t seed);
// Toy state tracker: one context per step t >= 1 keyed (q, gt_state_{t-1},
// u_gt_{t-1}); the tagged gt state, its untagged variant and corruptions.
ToyPolicy build_toy_tracker(const std::vector<TaskRecord>& tasks, int k, std::uint64_t seed);

// Texts typed into fields by distractor instructions.
const std::vector<std::string>& wrong_type_texts();

struct Fixture {
  World world;
  std::vector<TaskRecord> tasks;
};

// World seed 7 with 12 screens; 20 tasks, min_len 8, confuser rate 0.5,
// suite seed 3.
Fixture standard_fixture();
// Long confuser episodes for the temporal-order probe: world seed 11 with 30
// screens; 40 tasks, min_len 14, every task a confuser, suite seed 5.
Fixture probe_fixture();

inline constexpr int kStandardCandidates = 8;
inline constexpr int kStandardGroupSize = 4;

}  // namespace ces
