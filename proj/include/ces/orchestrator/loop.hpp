#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ces/agent_io/prompts.hpp"
#include "ces/core/rng.hpp"
#include "ces/core/types.hpp"
#include "ces/orchestrator/backend.hpp"
#include "ces/sim/world.hpp"

namespace ces {

enum class LoopMode { Full, NoCoordinator, NoStateTracker };
// "full", "no-coordinator", "no-state-tracker"
std::string_view to_string(LoopMode mode);
std::optional<LoopMode> loop_mode_from_string(std::string_view name);

struct LoopConfig {
  int max_steps = 30;
  LoopMode mode = LoopMode::Full;
  int history_window = 4;
  std::string initial_state_text = std::string(kInitialStateText);
  void validate() const;
};

struct Backends {
  std::shared_ptr<const PolicyBackend> coordinator;
  std::shared_ptr<const PolicyBackend> executor;
  std::shared_ptr<const PolicyBackend> state_tracker;
};

class Environment {
 public:
  virtual ~Environment() = default;
  virtual const Observation& current() const = 0;
  // Returns true when the action ends the episode.
  virtual bool step(const Action& action) = 0;
};

// Live screen-graph world.
class WorldEnv : public Environment {
 public:
  WorldEnv(const World& world, std::string start_screen);
  const Observation& current() const override;
  bool step(const Action& action) override;
  const std::string& screen_id() const { return screen_; }

 private:
  const World& world_;
  std::string screen_;
};

// Offline replay of a recorded task: observation t is the task's step t
// regardless of the action taken.
class ReplayEnv : public Environment {
 public:
  explicit ReplayEnv(const TaskRecord& task);
  const Observation& current() const override;
  bool step(const Action& action) override;

 private:
  const TaskRecord& task_;
  std::size_t index_ = 0;
};

// "(no actions yet)" when empty, else the last k compact descriptions,
// oldest first, newline-joined.
std::string serialize_history(const std::vector<Action>& actions, int k);

// Text inside the answer block, or the trimmed raw text when untagged.
std::string answer_or_raw(std::string_view raw);

// Runs one episode. Steps with ground truth (index < task.steps.size())
// carry a RewardBreakdown. Backend or environment failures end the episode
// with status EnvError and the completed steps so far.
Trajectory run_episode(const TaskRecord& task, Environment& env, const Backends& backends,
                       const LoopConfig& loop, const RewardConfig& reward, Rng& rng,
                       const PromptSet& prompts = {});

using EnvFactory = std::function<std::unique_ptr<Environment>(const TaskRecord&)>;

// Episodes in task order; episode i uses Rng(derive_seed(seed, i)), so the
// result does not depend on the parallelism bound.
std::vector<Trajectory> run_suite(const std::vector<TaskRecord>& tasks, const EnvFactory& make_env,
                                  const Backends& backends, const LoopConfig& loop,
                                  const RewardConfig& reward, std::uint64_t seed,
                                  int parallelism = 1, const PromptSet& prompts = {});

// Rewards re-derived from the logged raw executor texts and ground truth.
std::vector<std::optional<RewardBreakdown>> recompute_rewards(const Trajectory& traj,
                                                              const TaskRecord& task,
                                                              const RewardConfig& reward);

}  // namespace ces
