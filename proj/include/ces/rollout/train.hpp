#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "ces/orchestrator/backend.hpp"
#include "ces/rollout/stages.hpp"
#include "ces/sim/scripts.hpp"
#include "ces/sim/toy_policy.hpp"

namespace ces {

struct TrainResult {
  ToyPolicy policy;
  // Mean candidate reward per iteration.
  std::vector<double> curve;
  // Expected reward of the starting policy over all contexts.
  double initial_expectation = 0.0;
  CallCounts calls;
};

// Expected per-context reward of `policy` averaged over contexts, computed
// exactly by scoring every payload through the (deterministic) frozen chain.
double expected_policy_reward(int stage, const std::vector<StepContext>& contexts,
                              const ToyPolicy& policy, const PolicyBackend* frozen_coordinator,
                              const PolicyBackend& frozen_executor, const RewardConfig& reward);

// Each iteration is one pass over all contexts in a seeded shuffled order:
// collect a group per context from the current policy, then one toy_update
// over all groups. Stage 2 needs the frozen coordinator.
TrainResult train_toy(int stage, const std::vector<TaskRecord>& tasks, const ToyPolicy& policy,
                      const PolicyBackend& frozen_executor,
                      const PolicyBackend* frozen_coordinator, const GrpoConfig& grpo,
                      const RewardConfig& reward, int iterations, double learning_rate,
                      std::uint64_t seed);

// Trailing moving average with the given window (shorter at the start).
std::vector<double> moving_average(const std::vector<double>& xs, int window);

// Frozen executor of the toy pipeline: grounds every instruction the world
// understands, answers Complete otherwise.
std::shared_ptr<const PolicyBackend> frozen_grounding_executor(const World& w);
// Greedy view of a trained toy coordinator; unknown contexts answer "Go back".
std::shared_ptr<const PolicyBackend> frozen_toy_coordinator(const ToyPolicy& policy);

struct StagedToyParams {
  int candidates = kStandardCandidates;
  GrpoConfig grpo{0.2, 0.0, kStandardGroupSize, 1e-6};
  RewardConfig reward;
  int stage1_iterations = 200;
  int stage2_iterations = 200;
  double stage1_lr = 4.0;
  double stage2_lr = 4.0;
  std::uint64_t seed = 7;
};

struct StagedToyResult {
  TrainResult stage1;
  TrainResult stage2;  // empty when stage2_iterations is 0
};

// Stage 1 trains the toy coordinator against ground-truth states; Stage 2
// trains the toy tracker through the greedy Stage-1 coordinator and the
// frozen executor.
StagedToyResult run_staged_toy(const World& w, const std::vector<TaskRecord>& tasks,
                               const StagedToyParams& params);

}  // namespace ces
