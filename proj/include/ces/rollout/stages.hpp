#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ces/core/rng.hpp"
#include "ces/core/serialize.hpp"
#include "ces/core/types.hpp"
#include "ces/grpo/grpo.hpp"
#include "ces/orchestrator/backend.hpp"

namespace ces {

inline constexpr std::string_view kBatchSchema = "ces.stage_batch/v1";

// One teacher-forced training context.
struct StepContext {
  std::string task_id;
  int step_index = 0;
  std::string instruction;  // q
  Observation observation;  // s^t
  GroundTruthStep gt;       // a_gt^t
  std::optional<std::string> prev_state;            // m_gt^{t-1}
  std::optional<std::string> prev_executor_output;  // u_gt^{t-1}, stage 2 only
};

// Stage 1: every step, with m_gt^{t-1} taken from the step's gt_state.
// Stage 2: steps t >= 1, with m_gt^{t-1} and u_gt^{t-1} from step t-1.
std::vector<StepContext> build_contexts(const std::vector<TaskRecord>& tasks, int stage);

struct CandidateTrace {
  std::optional<std::string> coordinator_raw;  // stage 2 chain only
  std::string executor_raw;
  RewardBreakdown reward;
  bool operator==(const CandidateTrace&) const = default;
};

struct CallCounts {
  long coordinator = 0;
  long executor = 0;
  long state_tracker = 0;
  bool operator==(const CallCounts&) const = default;
};

struct StageBatch {
  int stage = 1;
  std::string task_id;
  int step_index = 0;
  std::string instruction;
  std::string prev_state;
  std::optional<std::string> prev_executor_output;
  std::string observation_ref;
  ScreenSize screen;
  GroundTruthStep gt;
  CandidateGroup group;
  std::vector<CandidateTrace> traces;
  RewardConfig reward_cfg;
  GrpoConfig grpo_cfg;
  CallCounts calls;
  bool operator==(const StageBatch&) const = default;
};

void to_json(Json& j, const StageBatch& b);
// Throws Error(MalformedRecord) on an unknown schema tag.
void from_json(const Json& j, StageBatch& b);

// Scores one candidate payload through the frozen chain. Stage 1 payloads
// are coordinator outputs; stage 2 payloads are state summaries routed
// through the coordinator first. R_format is always taken on the payload.
CandidateTrace evaluate_candidate(int stage, const StepContext& ctx, const std::string& payload,
                                  const PolicyBackend* coordinator, const PolicyBackend& executor,
                                  const RewardConfig& reward, Rng& rng);

// Throws Error(MissingGtState) / Error(BackendFailure) naming stage, task and step.
StageBatch stage1_collect(const StepContext& ctx, const PolicyBackend& coordinator,
                          const PolicyBackend& executor, const RewardConfig& reward,
                          const GrpoConfig& grpo, Rng& rng);
// Throws Error(MissingGtFields) / Error(BackendFailure).
StageBatch stage2_collect(const StepContext& ctx, const PolicyBackend& state_tracker,
                          const PolicyBackend& coordinator, const PolicyBackend& executor,
                          const RewardConfig& reward, const GrpoConfig& grpo, Rng& rng);

// Rewards re-derived from the stored candidate and executor texts.
std::vector<RewardBreakdown> recompute_batch_rewards(const StageBatch& batch);

// One JSON line per batch; the file is created even when empty.
// Throws Error(IoError).
std::size_t emit_batches(const std::vector<StageBatch>& batches, const std::filesystem::path& path);
std::vector<StageBatch> read_batches(const std::filesystem::path& path);

}  // namespace ces
