#include "ces/orchestrator/loop.hpp"

#include <atomic>
#include <mutex>
#include <thread>

#include "ces/agent_io/action_codec.hpp"
#include "ces/agent_io/tagged.hpp"
#include "ces/core/context_keys.hpp"
#include "ces/core/error.hpp"
#include "ces/core/text.hpp"
#include "ces/reward/reward.hpp"

namespace ces {

std::string_view to_string(LoopMode mode) {
  switch (mode) {
    case LoopMode::Full: return "full";
    case LoopMode::NoCoordinator: return "no-coordinator";
    case LoopMode::NoStateTracker: return "no-state-tracker";
  }
  return "full";
}

std::optional<LoopMode> loop_mode_from_string(std::string_view name) {
  for (auto m : {LoopMode::Full, LoopMode::NoCoordinator, LoopMode::NoStateTracker}) {
    if (to_string(m) == name) return m;
  }
  return std::nullopt;
}

void LoopConfig::validate() const {
  if (max_steps < 1) throw Error(Errc::ConfigError, "loop.max_steps must be >= 1");
  if (history_window < 1) throw Error(Errc::ConfigError, "loop.history_window must be >= 1");
}

WorldEnv::WorldEnv(const World& world, std::string start_screen)
    : world_(world), screen_(std::move(start_screen)) {
  world_.screen(screen_);
}

const Observation& WorldEnv::current() const { return world_.screen(screen_); }

bool WorldEnv::step(const Action& action) {
  const auto result = apply_action(world_, screen_, action);
  screen_ = result.next_screen;
  return result.ended;
}

ReplayEnv::ReplayEnv(const TaskRecord& task) : task_(task) {
  if (task_.steps.empty()) throw Error(Errc::InvalidArgument, "replay task has no steps");
}

const Observation& ReplayEnv::current() const { return task_.steps[index_].observation; }

bool ReplayEnv::step(const Action& action) {
  if (index_ + 1 < task_.steps.size()) ++index_;
  return is_terminal(action.kind);
}

std::string serialize_history(const std::vector<Action>& actions, int k) {
  if (actions.empty() || k <= 0) return "(no actions yet)";
  const std::size_t take = std::min(actions.size(), static_cast<std::size_t>(k));
  std::vector<std::string> parts;
  for (std::size_t i = actions.size() - take; i < actions.size(); ++i) {
    parts.push_back(describe(actions[i]));
  }
  return text::join(parts, "\n");
}

std::string answer_or_raw(std::string_view raw) {
  try {
    return parse_tagged(raw).answer;
  } catch (const Error&) {
    return std::string(text::trim(raw));
  }
}

namespace {

BackendRequest make_request(AgentRole role, std::string key, std::string prompt) {
  BackendRequest req;
  req.role = role;
  req.context_key = std::move(key);
  req.messages.push_back({"user", std::move(prompt)});
  return req;
}

const PolicyBackend& require(const std::shared_ptr<const PolicyBackend>& b, AgentRole role) {
  if (!b) {
    throw Error(Errc::BackendFailure,
                std::string(to_string(role)) + ": no backend configured for this mode");
  }
  return *b;
}

}  // namespace

Trajectory run_episode(const TaskRecord& task, Environment& env, const Backends& backends,
                       const LoopConfig& loop, const RewardConfig& reward, Rng& rng,
                       const PromptSet& prompts) {
  loop.validate();
  Trajectory traj;
  traj.task_id = task.task_id;
  traj.mode = std::string(to_string(loop.mode));
  traj.status = TrajectoryStatus::Truncated;

  const std::string& q = task.instruction;
  const bool use_coordinator = loop.mode != LoopMode::NoCoordinator;
  const bool use_tracker = loop.mode != LoopMode::NoStateTracker && backends.state_tracker;
  std::string state = loop.initial_state_text;
  std::vector<Action> history;

  try {
    for (int t = 0; t < loop.max_steps; ++t) {
      const Observation& obs = env.current();
      StepLog log;
      log.step_index = t;
      log.observation_ref = obs.image_ref.value_or(obs.screen_id);
      log.screen = obs.size();
      // The coordinator context is the tracked state, or the recent action
      // history in the ablation without a tracker.
      const std::string context =
          use_tracker ? state : serialize_history(history, loop.history_window);
      log.prev_state = {context, t};

      std::string instruction = q;
      if (use_coordinator) {
        const auto& coordinator = require(backends.coordinator, AgentRole::Coordinator);
        const auto prompt = prompts.coordinator.render(
            {{std::string(kPhHighLevel), q}, {std::string(kPhCurrentState), context}});
        const auto resp = call_backend(
            coordinator,
            make_request(AgentRole::Coordinator, coordinator_key(q, obs.screen_id, context),
                         prompt),
            rng);
        log.coordinator_raw = resp.text;
        instruction = answer_or_raw(resp.text);
        if (instruction.empty()) instruction = "(empty instruction)";
      }
      log.instruction = {instruction, t};

      const auto& executor = require(backends.executor, AgentRole::Executor);
      const auto exec_prompt =
          prompts.executor.render({{std::string(kPhInstruction), instruction}});
      const auto exec_resp = call_backend(
          executor,
          make_request(AgentRole::Executor, executor_key(instruction, obs.screen_id), exec_prompt),
          rng);
      log.executor = parse_executor_output(exec_resp.text, obs.size());

      if (static_cast<std::size_t>(t) < task.steps.size()) {
        log.reward = total_reward(log.executor.raw, log.executor.action, task.steps[t].gt, reward);
      }

      bool ended = false;
      if (log.executor.action) {
        ended = env.step(*log.executor.action);
        history.push_back(*log.executor.action);
      }

      if (use_tracker) {
        const auto tracker_prompt =
            prompts.state_tracker.render({{std::string(kPhHighLevel), q},
                                          {std::string(kPhCurrentState), state},
                                          {std::string(kPhExecutorOutput), log.executor.raw}});
        const auto resp = call_backend(
            *backends.state_tracker,
            make_request(AgentRole::StateTracker, tracker_key(q, state, log.executor.raw),
                         tracker_prompt),
            rng);
        log.state_tracker_raw = resp.text;
        state = answer_or_raw(resp.text);
        log.next_state = {state, t + 1};
      } else {
        log.next_state = {serialize_history(history, loop.history_window), t + 1};
      }

      traj.steps.push_back(std::move(log));
      if (ended) {
        traj.status = TrajectoryStatus::CompletedByAgent;
        break;
      }
    }
  } catch (const Error& e) {
    traj.status = TrajectoryStatus::EnvError;
    traj.error = e.what();
  }
  return traj;
}

std::vector<Trajectory> run_suite(const std::vector<TaskRecord>& tasks, const EnvFactory& make_env,
                                  const Backends& backends, const LoopConfig& loop,
                                  const RewardConfig& reward, std::uint64_t seed, int parallelism,
                                  const PromptSet& prompts) {
  std::vector<Trajectory> out(tasks.size());
  auto run_one = [&](std::size_t i) {
    Rng rng(derive_seed(seed, i));
    try {
      auto env = make_env(tasks[i]);
      out[i] = run_episode(tasks[i], *env, backends, loop, reward, rng, prompts);
    } catch (const Error& e) {
      out[i].task_id = tasks[i].task_id;
      out[i].mode = std::string(to_string(loop.mode));
      out[i].status = TrajectoryStatus::EnvError;
      out[i].error = e.what();
    }
  };
  const int workers = std::max(1, std::min<int>(parallelism, static_cast<int>(tasks.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i) run_one(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < tasks.size(); i = next++) run_one(i);
    });
  }
  for (auto& th : pool) th.join();
  return out;
}

std::vector<std::optional<RewardBreakdown>> recompute_rewards(const Trajectory& traj,
                                                              const TaskRecord& task,
                                                              const RewardConfig& reward) {
  std::vector<std::optional<RewardBreakdown>> out;
  for (const auto& step : traj.steps) {
    if (step.step_index < 0 || static_cast<std::size_t>(step.step_index) >= task.steps.size()) {
      out.emplace_back();
      continue;
    }
    const auto parsed = parse_executor_output(step.executor.raw, step.screen);
    out.push_back(total_reward(step.executor.raw, parsed.action, task.steps[step.step_index].gt,
                               reward));
  }
  return out;
}

}  // namespace ces
