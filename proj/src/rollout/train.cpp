#include "ces/rollout/train.hpp"

#include <numeric>

#include "ces/agent_io/action_codec.hpp"
#include "ces/core/context_keys.hpp"
#include "ces/core/error.hpp"

namespace ces {

namespace {

std::string context_key_for(int stage, const StepContext& ctx);

}  // namespace

double expected_policy_reward(int stage, const std::vector<StepContext>& contexts,
                              const ToyPolicy& policy, const PolicyBackend* frozen_coordinator,
                              const PolicyBackend& frozen_executor, const RewardConfig& reward) {
  if (contexts.empty()) throw Error(Errc::EmptyInput, "no training contexts");
  Rng rng(0);
  double total = 0.0;
  for (const auto& ctx : contexts) {
    const auto key = context_key_for(stage, ctx);
    const auto probs = policy.probabilities(key);
    const auto& payloads = policy.context(key).payloads;
    double expected = 0.0;
    for (std::size_t j = 0; j < payloads.size(); ++j) {
      const auto trace = evaluate_candidate(stage, ctx, payloads[j], frozen_coordinator,
                                            frozen_executor, reward, rng);
      expected += probs[j] * trace.reward.total;
    }
    total += expected;
  }
  return total / static_cast<double>(contexts.size());
}

TrainResult train_toy(int stage, const std::vector<TaskRecord>& tasks, const ToyPolicy& policy,
                      const PolicyBackend& frozen_executor,
                      const PolicyBackend* frozen_coordinator, const GrpoConfig& grpo,
                      const RewardConfig& reward, int iterations, double learning_rate,
                      std::uint64_t seed) {
  grpo.validate();
  reward.validate();
  if (iterations < 0) throw Error(Errc::InvalidArgument, "iterations must be >= 0");
  const AgentRole want = stage == 1 ? AgentRole::Coordinator : AgentRole::StateTracker;
  if (policy.role != want) {
    throw Error(Errc::InvalidArgument, "stage " + std::to_string(stage) + " trains a " +
                                           std::string(to_string(want)) + " policy");
  }
  if (stage == 2 && !frozen_coordinator) {
    throw Error(Errc::InvalidArgument, "stage 2 needs a frozen coordinator");
  }
  const auto contexts = build_contexts(tasks, stage);
  if (contexts.empty()) throw Error(Errc::EmptyInput, "no training contexts");
  // Fail early on contexts lacking ground truth.
  for (const auto& ctx : contexts) {
    if (stage == 1 && !ctx.prev_state) {
      throw Error(Errc::MissingGtState, ctx.task_id + " step " + std::to_string(ctx.step_index) +
                                            ": no ground-truth state");
    }
    if (stage == 2 && (!ctx.prev_state || !ctx.prev_executor_output)) {
      throw Error(Errc::MissingGtFields, ctx.task_id + " step " +
                                             std::to_string(ctx.step_index) +
                                             ": needs prior state and executor output");
    }
  }

  TrainResult result;
  result.policy = policy;
  result.initial_expectation = expected_policy_reward(stage, contexts, policy, frozen_coordinator,
                                                      frozen_executor, reward);
  std::vector<std::size_t> order(contexts.size());
  std::iota(order.begin(), order.end(), 0);

  for (int it = 0; it < iterations; ++it) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(it)));
    rng.shuffle(order);
    const ToyBackend sampler(result.policy);
    std::vector<CandidateGroup> groups;
    groups.reserve(order.size());
    double reward_sum = 0.0;
    std::size_t n = 0;
    for (std::size_t idx : order) {
      const auto& ctx = contexts[idx];
      StageBatch batch =
          stage == 1
              ? stage1_collect(ctx, sampler, frozen_executor, reward, grpo, rng)
              : stage2_collect(ctx, sampler, *frozen_coordinator, frozen_executor, reward, grpo,
                               rng);
      result.calls.coordinator += batch.calls.coordinator;
      result.calls.executor += batch.calls.executor;
      result.calls.state_tracker += batch.calls.state_tracker;
      for (const auto& c : batch.group.candidates) {
        reward_sum += c.reward;
        ++n;
      }
      groups.push_back(std::move(batch.group));
    }
    result.curve.push_back(reward_sum / static_cast<double>(n));
    result.policy = toy_update(result.policy, groups, grpo, learning_rate);
  }
  return result;
}

std::vector<double> moving_average(const std::vector<double>& xs, int window) {
  std::vector<double> out;
  double sum = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sum += xs[i];
    if (i >= static_cast<std::size_t>(window)) sum -= xs[i - window];
    const std::size_t n = std::min(i + 1, static_cast<std::size_t>(window));
    out.push_back(sum / static_cast<double>(n));
  }
  return out;
}

std::shared_ptr<const PolicyBackend> frozen_grounding_executor(const World& w) {
  return std::make_shared<ScriptedBackend>(
      AgentRole::Executor, grounding_executor_table(w),
      canonical_executor_output("Mark the task as complete", Action::simple(ActionType::Complete)));
}

std::shared_ptr<const PolicyBackend> frozen_toy_coordinator(const ToyPolicy& policy) {
  return std::make_shared<ToyBackend>(policy, true, coordinator_response("Go back"));
}

StagedToyResult run_staged_toy(const World& w, const std::vector<TaskRecord>& tasks,
                               const StagedToyParams& params) {
  StagedToyResult out;
  const auto executor = frozen_grounding_executor(w);
  const auto coordinator = build_toy_coordinator(w, tasks, params.candidates, params.seed);
  out.stage1 = train_toy(1, tasks, coordinator, *executor, nullptr, params.grpo, params.reward,
                         params.stage1_iterations, params.stage1_lr, derive_seed(params.seed, 1));
  if (params.stage2_iterations > 0) {
    const auto frozen = frozen_toy_coordinator(out.stage1.policy);
    const auto tracker = build_toy_tracker(tasks, params.candidates, params.seed);
    out.stage2 = train_toy(2, tasks, tracker, *executor, frozen.get(), params.grpo, params.reward,
                           params.stage2_iterations, params.stage2_lr, derive_seed(params.seed, 2));
  }
  return out;
}

namespace {

std::string context_key_for(int stage, const StepContext& ctx) {
  if (stage == 1) {
    return coordinator_key(ctx.instruction, ctx.observation.screen_id, ctx.prev_state.value_or(""));
  }
  return tracker_key(ctx.instruction, ctx.prev_state.value_or(""),
                     ctx.prev_executor_output.value_or(""));
}

}  // namespace

}  // namespace ces
