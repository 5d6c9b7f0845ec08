#include "ces/rollout/stages.hpp"

#include "ces/agent_io/action_codec.hpp"
#include "ces/agent_io/prompts.hpp"
#include "ces/core/context_keys.hpp"
#include "ces/core/error.hpp"
#include "ces/orchestrator/loop.hpp"
#include "ces/reward/reward.hpp"
#include "ces/sim/scripts.hpp"

namespace ces {

namespace {

const PromptSet& prompts() {
  static const PromptSet set;
  return set;
}

BackendRequest request(AgentRole role, std::string key, std::string prompt) {
  BackendRequest req;
  req.role = role;
  req.context_key = std::move(key);
  req.messages.push_back({"user", std::move(prompt)});
  return req;
}

std::string where(int stage, const StepContext& ctx) {
  return "stage " + std::to_string(stage) + ", " + ctx.task_id + " step " +
         std::to_string(ctx.step_index);
}

std::string coordinator_prompt(const StepContext& ctx, const std::string& state) {
  return prompts().coordinator.render(
      {{std::string(kPhHighLevel), ctx.instruction}, {std::string(kPhCurrentState), state}});
}

std::string executor_call(const StepContext& ctx, const std::string& instruction,
                          const PolicyBackend& executor, Rng& rng) {
  const auto prompt = prompts().executor.render({{std::string(kPhInstruction), instruction}});
  return call_backend(executor,
                      request(AgentRole::Executor,
                              executor_key(instruction, ctx.observation.screen_id), prompt),
                      rng)
      .text;
}

template <typename Fn>
auto with_identity(int stage, const StepContext& ctx, Fn fn) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.code() == Errc::BackendFailure) {
      throw Error(Errc::BackendFailure, where(stage, ctx) + ": " + e.detail());
    }
    throw;
  }
}

StageBatch start_batch(int stage, const StepContext& ctx, const RewardConfig& reward,
                       const GrpoConfig& grpo) {
  StageBatch b;
  b.stage = stage;
  b.task_id = ctx.task_id;
  b.step_index = ctx.step_index;
  b.instruction = ctx.instruction;
  b.prev_state = ctx.prev_state.value_or("");
  b.prev_executor_output = ctx.prev_executor_output;
  b.observation_ref = ctx.observation.image_ref.value_or(ctx.observation.screen_id);
  b.screen = ctx.observation.size();
  b.gt = ctx.gt;
  b.reward_cfg = reward;
  b.grpo_cfg = grpo;
  return b;
}

}  // namespace

std::vector<StepContext> build_contexts(const std::vector<TaskRecord>& tasks, int stage) {
  if (stage != 1 && stage != 2) throw Error(Errc::InvalidArgument, "stage must be 1 or 2");
  std::vector<StepContext> out;
  for (const auto& task : tasks) {
    for (std::size_t t = stage == 1 ? 0 : 1; t < task.steps.size(); ++t) {
      StepContext ctx;
      ctx.task_id = task.task_id;
      ctx.step_index = static_cast<int>(t);
      ctx.instruction = task.instruction;
      ctx.observation = task.steps[t].observation;
      ctx.gt = task.steps[t].gt;
      if (stage == 1) {
        ctx.prev_state = task.steps[t].gt.gt_state;
      } else {
        ctx.prev_state = task.steps[t - 1].gt.gt_state;
        if (task.steps[t - 1].gt.gt_state) {
          ctx.prev_executor_output = gt_executor_output(task.steps[t - 1]);
        }
      }
      out.push_back(std::move(ctx));
    }
  }
  return out;
}

CandidateTrace evaluate_candidate(int stage, const StepContext& ctx, const std::string& payload,
                                  const PolicyBackend* coordinator, const PolicyBackend& executor,
                                  const RewardConfig& reward, Rng& rng) {
  CandidateTrace trace;
  std::string instruction;
  if (stage == 1) {
    instruction = answer_or_raw(payload);
  } else {
    if (!coordinator) throw Error(Errc::InvalidArgument, "stage 2 needs a frozen coordinator");
    const std::string state = answer_or_raw(payload);
    const auto resp = call_backend(
        *coordinator,
        request(AgentRole::Coordinator,
                coordinator_key(ctx.instruction, ctx.observation.screen_id, state),
                coordinator_prompt(ctx, state)),
        rng);
    trace.coordinator_raw = resp.text;
    instruction = answer_or_raw(resp.text);
  }
  trace.executor_raw = executor_call(ctx, instruction, executor, rng);
  const auto parsed = parse_executor_output(trace.executor_raw, ctx.observation.size());
  trace.reward = total_reward(payload, parsed.action, ctx.gt, reward);
  return trace;
}

StageBatch stage1_collect(const StepContext& ctx, const PolicyBackend& coordinator,
                          const PolicyBackend& executor, const RewardConfig& reward,
                          const GrpoConfig& grpo, Rng& rng) {
  if (!ctx.prev_state) {
    throw Error(Errc::MissingGtState, where(1, ctx) + ": no ground-truth state");
  }
  return with_identity(1, ctx, [&] {
    StageBatch b = start_batch(1, ctx, reward, grpo);
    b.group.context_key =
        coordinator_key(ctx.instruction, ctx.observation.screen_id, *ctx.prev_state);
    const auto prompt = coordinator_prompt(ctx, *ctx.prev_state);
    for (int i = 0; i < grpo.group_size; ++i) {
      const auto resp = call_backend(
          coordinator, request(AgentRole::Coordinator, b.group.context_key, prompt), rng);
      ++b.calls.coordinator;
      auto trace = evaluate_candidate(1, ctx, resp.text, nullptr, executor, reward, rng);
      ++b.calls.executor;
      b.group.candidates.push_back({resp.text, trace.reward.total, resp.logp, resp.logp, {}});
      b.traces.push_back(std::move(trace));
    }
    b.group.compute_advantages(grpo.std_floor);
    return b;
  });
}

StageBatch stage2_collect(const StepContext& ctx, const PolicyBackend& state_tracker,
                          const PolicyBackend& coordinator, const PolicyBackend& executor,
                          const RewardConfig& reward, const GrpoConfig& grpo, Rng& rng) {
  if (!ctx.prev_state || !ctx.prev_executor_output) {
    throw Error(Errc::MissingGtFields,
                where(2, ctx) + ": needs ground-truth prior state and executor output");
  }
  return with_identity(2, ctx, [&] {
    StageBatch b = start_batch(2, ctx, reward, grpo);
    b.group.context_key =
        tracker_key(ctx.instruction, *ctx.prev_state, *ctx.prev_executor_output);
    const auto prompt = prompts().state_tracker.render(
        {{std::string(kPhHighLevel), ctx.instruction},
         {std::string(kPhCurrentState), *ctx.prev_state},
         {std::string(kPhExecutorOutput), *ctx.prev_executor_output}});
    for (int i = 0; i < grpo.group_size; ++i) {
      const auto resp = call_backend(
          state_tracker, request(AgentRole::StateTracker, b.group.context_key, prompt), rng);
      ++b.calls.state_tracker;
      auto trace = evaluate_candidate(2, ctx, resp.text, &coordinator, executor, reward, rng);
      ++b.calls.coordinator;
      ++b.calls.executor;
      b.group.candidates.push_back({resp.text, trace.reward.total, resp.logp, resp.logp, {}});
      b.traces.push_back(std::move(trace));
    }
    b.group.compute_advantages(grpo.std_floor);
    return b;
  });
}

std::vector<RewardBreakdown> recompute_batch_rewards(const StageBatch& batch) {
  std::vector<RewardBreakdown> out;
  for (std::size_t i = 0; i < batch.traces.size() && i < batch.group.candidates.size(); ++i) {
    const auto parsed = parse_executor_output(batch.traces[i].executor_raw, batch.screen);
    out.push_back(
        total_reward(batch.group.candidates[i].payload, parsed.action, batch.gt, batch.reward_cfg));
  }
  return out;
}

void to_json(Json& j, const StageBatch& b) {
  Json traces = Json::array();
  for (const auto& t : b.traces) {
    Json tj{{"executor_raw", t.executor_raw}, {"reward", t.reward}};
    if (t.coordinator_raw) tj["coordinator_raw"] = *t.coordinator_raw;
    traces.push_back(std::move(tj));
  }
  j = Json{{"schema", kBatchSchema},
           {"stage", b.stage},
           {"task_id", b.task_id},
           {"step_index", b.step_index},
           {"context",
            {{"instruction", b.instruction},
             {"prev_state", b.prev_state},
             {"observation_ref", b.observation_ref},
             {"screen_size", b.screen}}},
           {"gt", b.gt},
           {"group", b.group},
           {"traces", std::move(traces)},
           {"config", {{"reward", b.reward_cfg}, {"grpo", b.grpo_cfg}, {"logp", "token_sum"}}},
           {"calls",
            {{"coordinator", b.calls.coordinator},
             {"executor", b.calls.executor},
             {"state_tracker", b.calls.state_tracker}}}};
  if (b.prev_executor_output) j["context"]["prev_executor_output"] = *b.prev_executor_output;
}

void from_json(const Json& j, StageBatch& b) {
  const auto schema = j.value("schema", std::string{});
  if (schema != kBatchSchema) {
    throw Error(Errc::MalformedRecord, "unsupported batch schema '" + schema + "'");
  }
  b = StageBatch{};
  try {
    b.stage = j.at("stage").get<int>();
    b.task_id = j.at("task_id").get<std::string>();
    b.step_index = j.at("step_index").get<int>();
    const auto& ctx = j.at("context");
    b.instruction = ctx.at("instruction").get<std::string>();
    b.prev_state = ctx.at("prev_state").get<std::string>();
    if (ctx.contains("prev_executor_output")) {
      b.prev_executor_output = ctx["prev_executor_output"].get<std::string>();
    }
    b.observation_ref = ctx.at("observation_ref").get<std::string>();
    b.screen = ctx.at("screen_size").get<ScreenSize>();
    b.gt = j.at("gt").get<GroundTruthStep>();
    b.group = j.at("group").get<CandidateGroup>();
    for (const auto& tj : j.at("traces")) {
      CandidateTrace t;
      t.executor_raw = tj.at("executor_raw").get<std::string>();
      t.reward = tj.at("reward").get<RewardBreakdown>();
      if (tj.contains("coordinator_raw")) t.coordinator_raw = tj["coordinator_raw"].get<std::string>();
      b.traces.push_back(std::move(t));
    }
    b.reward_cfg = j.at("config").at("reward").get<RewardConfig>();
    b.grpo_cfg = j.at("config").at("grpo").get<GrpoConfig>();
    const auto& calls = j.at("calls");
    b.calls = {calls.at("coordinator").get<long>(), calls.at("executor").get<long>(),
               calls.at("state_tracker").get<long>()};
  } catch (const Json::exception& e) {
    throw Error(Errc::MalformedRecord, std::string("stage batch: ") + e.what());
  }
}

std::size_t emit_batches(const std::vector<StageBatch>& batches,
                         const std::filesystem::path& path) {
  write_jsonl_of(path, batches);
  return batches.size();
}

std::vector<StageBatch> read_batches(const std::filesystem::path& path) {
  return read_jsonl_as<StageBatch>(path);
}

}  // namespace ces
