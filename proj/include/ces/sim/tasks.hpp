#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ces/core/types.hpp"
#include "ces/sim/world.hpp"

namespace ces {

struct TaskSuiteParams {
  int n_tasks = 20;
  int min_len = 8;
  double confuser_rate = 0.5;
  std::uint64_t seed = 3;
  int max_subgoals = 3;
};

// Tasks are 1..max_subgoals trips from home to a target screen, joined by
// PressHome and closed by Complete. Confuser tasks make at least two trips,
// so the home screen recurs at non-adjacent steps. Deterministic in
// (world, params). Throws Error(Unsatisfiable) when no task reaches min_len.
std::vector<TaskRecord> generate_task_suite(const World& w, const TaskSuiteParams& params);

// Longest task the generator can build in this world.
int max_task_length(const World& w, int max_subgoals);

// "Opened <app>; completed <k> of <n> subgoals; last action <verb>".
std::string progress_state(std::string_view app, int completed, int total,
                           std::string_view last_verb);

// State after the final step (stored in metadata "final_state").
std::string final_state_text(const TaskRecord& task);

// True iff some screen_id appears at two non-adjacent steps.
bool has_nonadjacent_repeat(const TaskRecord& task);

// Replays the ground-truth canonical actions; empty iff every transition
// lands on the next step's screen and the last action ends the episode.
std::vector<std::string> replay_violations(const World& w, const TaskRecord& task);

}  // namespace ces
