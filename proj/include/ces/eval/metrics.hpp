#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ces/core/serialize.hpp"
#include "ces/core/types.hpp"

namespace ces {

struct StepVerdict {
  bool type_ok = false;
  std::optional<bool> gr_ok;  // only for point-bearing gt steps
  bool sr_ok = false;
  bool operator==(const StepVerdict&) const = default;
};

// `pred` absent means the output did not parse: every flag is false.
StepVerdict eval_step(const std::optional<Action>& pred, const GroundTruthStep& gt,
                      const RewardConfig& cfg = {});

struct MetricCount {
  long correct = 0;
  long defined = 0;
  // 100 * correct / defined; absent when nothing is defined.
  std::optional<double> percent() const;
  bool operator==(const MetricCount&) const = default;
};

struct MetricSummary {
  MetricCount type;
  MetricCount gr;
  MetricCount sr;
  bool operator==(const MetricSummary&) const = default;
  void add(const StepVerdict& v);
};

struct TaskVerdicts {
  std::string task_id;
  std::vector<StepVerdict> steps;
  // Whole-episode success, when known.
  std::optional<bool> episode_success;
};

struct Report {
  std::string mode;
  RewardConfig config;
  MetricSummary suite;
  std::map<std::string, MetricSummary> per_task;  // ordered by task id
  long episodes = 0;
  long episode_successes = 0;
  long episodes_scored = 0;  // episodes with a known success flag
  bool operator==(const Report&) const = default;
};

// Throws Error(EmptyInput) when there is no verdict at all.
Report aggregate(const std::vector<TaskVerdicts>& verdicts, std::string mode = {},
                 const RewardConfig& cfg = {});

Json report_json(const Report& report);
std::string report_table(const Report& report);

// Every gt step solved in order and the episode closed by the agent.
bool episode_success(const Trajectory& traj, const TaskRecord& task, const RewardConfig& cfg = {});

// Matches predictions to tasks by task id. Gt steps the trajectory never
// reached count as parse failures; tasks without a prediction are scored
// the same way. Predictions for unknown tasks are ignored with a warning.
std::vector<TaskVerdicts> score_trajectories(const std::vector<Trajectory>& preds,
                                             const std::vector<TaskRecord>& tasks,
                                             const RewardConfig& cfg = {});

}  // namespace ces
