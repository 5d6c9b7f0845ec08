#include <gtest/gtest.h>

#include <thread>

#include "httplib.h"

#include "ces/agent_io/action_codec.hpp"
#include "ces/core/context_keys.hpp"
#include "ces/core/error.hpp"
#include "ces/core/validate.hpp"
#include "ces/eval/metrics.hpp"
#include "ces/orchestrator/loop.hpp"
#include "ces/sim/grounding.hpp"
#include "ces/sim/scripts.hpp"
#include "test_util.hpp"

using namespace ces;

namespace {

// a -> b -> c -> d, back to c, then complete: five steps.
TaskRecord chain_task(const World& w) {
  TaskRecord t;
  t.task_id = "chain";
  t.instruction = "Open a new meeting, then return to the schedule";
  struct Plan {
    std::string screen;
    Action action;
    std::string label;
  };
  auto center = [&](const std::string& s, const std::string& label) {
    const auto c = w.screen(s).find_label(label)->bbox.center();
    return Action::click(c.x, c.y);
  };
  const std::vector<Plan> plan = {
      {"a", center("a", "Meetings"), "Meetings"},
      {"b", center("b", "Schedule"), "Schedule"},
      {"c", center("c", "New Meeting"), "New Meeting"},
      {"d", Action::simple(ActionType::PressBack), ""},
      {"c", Action::simple(ActionType::Complete), ""},
  };
  for (std::size_t i = 0; i < plan.size(); ++i) {
    TaskStep s;
    s.observation = w.screen(plan[i].screen);
    s.gt.gt_type = plan[i].action.kind;
    if (plan[i].action.point) {
      s.gt.gt_bbox = w.screen(plan[i].screen).find_label(plan[i].label)->bbox;
    }
    s.gt.gt_state = i == 0 ? std::string(kInitialStateText) : "progress " + std::to_string(i);
    s.gt.gt_instruction = instruction_for(plan[i].action, plan[i].label);
    t.steps.push_back(s);
  }
  t.metadata["final_state"] = "progress done";
  return t;
}

Backends oracle_backends(const World& w, const std::vector<TaskRecord>& tasks) {
  Backends b;
  b.coordinator = std::make_shared<ScriptedBackend>(AgentRole::Coordinator,
                                                    oracle_coordinator_table(tasks));
  b.executor = std::make_shared<ScriptedBackend>(AgentRole::Executor, grounding_executor_table(w));
  b.state_tracker =
      std::make_shared<ScriptedBackend>(AgentRole::StateTracker, oracle_tracker_table(tasks));
  return b;
}

std::vector<Trajectory> run_fixture(const Fixture& fx, const Backends& b, LoopMode mode,
                                    int parallelism = 1) {
  LoopConfig loop;
  loop.mode = mode;
  EnvFactory f = [&](const TaskRecord& t) -> std::unique_ptr<Environment> {
    return std::make_unique<WorldEnv>(fx.world, t.steps.front().observation.screen_id);
  };
  return run_suite(fx.tasks, f, b, loop, RewardConfig{}, 5, parallelism);
}

}  // namespace

TEST(SerializeHistory, Window) {
  EXPECT_EQ(serialize_history({}, 4), "(no actions yet)");
  EXPECT_EQ(serialize_history({Action::click(1, 2)}, 4), "Click(1,2)");
  std::vector<Action> six;
  for (int i = 0; i < 6; ++i) six.push_back(Action::click(i, i));
  EXPECT_EQ(serialize_history(six, 4), "Click(2,2)\nClick(3,3)\nClick(4,4)\nClick(5,5)");
}

TEST(AnswerOrRaw, TaggedAndUntagged) {
  EXPECT_EQ(answer_or_raw("<think>a</think><answer> go </answer>"), "go");
  EXPECT_EQ(answer_or_raw("  plain text "), "plain text");
}

TEST(ScriptedBackend, LookupOrder) {
  ScriptTable table{{make_key({"q", "s", "m"}), "exact"}, {make_key({"q", "s", "*"}), "wild"}};
  const ScriptedBackend b(AgentRole::Coordinator, table);
  Rng rng(1);
  auto req = [](std::string key) {
    BackendRequest r;
    r.role = AgentRole::Coordinator;
    r.context_key = std::move(key);
    return r;
  };
  EXPECT_EQ(call_backend(b, req(make_key({"q", "s", "m"})), rng).text, "exact");
  EXPECT_EQ(call_backend(b, req(make_key({"q", "s", "other"})), rng).text, "wild");
  try {
    call_backend(b, req(make_key({"x", "y", "z"})), rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::BackendFailure);
  }
  EXPECT_EQ(b.calls(), 3);
  const ScriptedBackend with_default(AgentRole::Coordinator, {}, "fallback");
  EXPECT_EQ(call_backend(with_default, req("anything"), rng).text, "fallback");
}

TEST(CallBackend, RoleMismatchIsRejected) {
  const ScriptedBackend b(AgentRole::Executor, {}, "x");
  BackendRequest r;
  r.role = AgentRole::Coordinator;
  Rng rng(1);
  EXPECT_THROW(call_backend(b, r, rng), Error);
}

TEST(ToyBackend, GreedyAndSampled) {
  ToyPolicy p;
  p.role = AgentRole::Coordinator;
  p.contexts["k"] = ToyContext{{"a", "b"}, {0.0, 3.0}};
  const ToyBackend greedy(p, true);
  BackendRequest r;
  r.role = AgentRole::Coordinator;
  r.context_key = "k";
  Rng rng(3);
  const auto resp = call_backend(greedy, r, rng);
  EXPECT_EQ(resp.text, "b");
  ASSERT_TRUE(resp.logp);
  EXPECT_NEAR(*resp.logp, p.log_probabilities("k")[1], 1e-12);
  r.context_key = "missing";
  EXPECT_THROW(call_backend(greedy, r, rng), Error);
  const ToyBackend with_default(p, false, "dflt");
  EXPECT_EQ(call_backend(with_default, r, rng).text, "dflt");
}

TEST(RemoteBackend, EchoStub) {
  httplib::Server svr;
  std::string seen_auth;
  svr.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    seen_auth = req.get_header_value("Authorization");
    const auto body = Json::parse(req.body);
    const std::string echo = body["messages"].back()["content"].get<std::string>();
    res.set_content(Json{{"choices", {{{"message", {{"content", "stub:" + echo}}}}}}}.dump(),
                    "application/json");
  });
  svr.Post("/broken", [](const httplib::Request&, httplib::Response& res) {
    res.status = 500;
    res.set_content("oops", "text/plain");
  });
  const int port = svr.bind_to_any_port("127.0.0.1");
  std::thread th([&] { svr.listen_after_bind(); });
  svr.wait_until_ready();

  ::setenv("CES_TEST_REMOTE_KEY", "secret", 1);
  RemoteConfig cfg;
  cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  cfg.model = "stub";
  cfg.retries = 0;
  cfg.timeout_ms = 2000;
  cfg.api_key_env = "CES_TEST_REMOTE_KEY";
  const RemoteBackend remote(AgentRole::Executor, cfg);
  BackendRequest req;
  req.role = AgentRole::Executor;
  req.messages.push_back({"user", "hello"});
  Rng rng(1);
  EXPECT_EQ(call_backend(remote, req, rng).text, "stub:hello");
  EXPECT_EQ(seen_auth, "Bearer secret");

  RemoteConfig broken = cfg;
  broken.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/broken";
  broken.retries = 1;
  try {
    call_backend(RemoteBackend(AgentRole::Executor, broken), req, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::BackendFailure);
    EXPECT_NE(std::string(e.what()).find("MalformedResponse"), std::string::npos);
  }
  svr.stop();
  th.join();

  RemoteConfig dead = cfg;
  dead.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  try {
    call_backend(RemoteBackend(AgentRole::Executor, dead), req, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::BackendFailure);
  }
}

TEST(RunEpisode, OracleChainCompletes) {
  const World w = build_world(test_util::chain_world_spec());
  const auto task = chain_task(w);
  ASSERT_TRUE(validate_task(task).empty());
  const auto b = oracle_backends(w, {task});
  WorldEnv env(w, "a");
  Rng rng(1);
  const auto traj = run_episode(task, env, b, LoopConfig{}, RewardConfig{}, rng);
  ASSERT_EQ(traj.status, TrajectoryStatus::CompletedByAgent) << traj.error.value_or("");
  ASSERT_EQ(traj.steps.size(), 5u);
  for (std::size_t t = 0; t < 5; ++t) {
    EXPECT_TRUE(eval_step(traj.steps[t].executor.action, task.steps[t].gt).sr_ok);
    ASSERT_TRUE(traj.steps[t].reward);
    EXPECT_DOUBLE_EQ(traj.steps[t].reward->total, 1.0);
  }
  EXPECT_TRUE(validate_trajectory(traj).empty());
}

TEST(RunEpisode, MaxStepsTruncates) {
  const auto fx = standard_fixture();
  const auto b = oracle_backends(fx.world, fx.tasks);
  const auto& task = fx.tasks.front();
  ASSERT_GE(task.steps.size(), 8u);
  LoopConfig loop;
  loop.max_steps = 3;
  WorldEnv env(fx.world, task.steps.front().observation.screen_id);
  Rng rng(1);
  const auto traj = run_episode(task, env, b, loop, RewardConfig{}, rng);
  EXPECT_EQ(traj.status, TrajectoryStatus::Truncated);
  EXPECT_EQ(traj.steps.size(), 3u);
  EXPECT_TRUE(validate_trajectory(traj).empty());
}

TEST(RunEpisode, StateTrackerResolvesConfuser) {
  const auto fx = standard_fixture();
  const auto b = oracle_backends(fx.world, fx.tasks);
  const auto full = run_fixture(fx, b, LoopMode::Full);
  const auto ablated = run_fixture(fx, b, LoopMode::NoStateTracker);
  int checked = 0;
  for (std::size_t i = 0; i < fx.tasks.size(); ++i) {
    if (fx.tasks[i].metadata.at("confuser") != "true") continue;
    EXPECT_TRUE(episode_success(full[i], fx.tasks[i])) << fx.tasks[i].task_id;
    EXPECT_FALSE(episode_success(ablated[i], fx.tasks[i])) << fx.tasks[i].task_id;
    ++checked;
  }
  EXPECT_GT(checked, 0);
}

TEST(RunEpisode, CoordinatorContextFollowsMode) {
  const auto fx = standard_fixture();
  const auto base = oracle_backends(fx.world, fx.tasks);
  const auto recorder = std::make_shared<test_util::RecordingBackend>(base.coordinator);
  Backends b = base;
  b.coordinator = recorder;
  const std::vector<TaskRecord> one{fx.tasks.front()};
  const Fixture small{fx.world, one};
  run_fixture(small, b, LoopMode::Full);
  const auto full_reqs = recorder->requests();
  ASSERT_FALSE(full_reqs.empty());
  for (std::size_t t = 0; t < full_reqs.size(); ++t) {
    const auto& prompt = full_reqs[t].messages.front().content;
    EXPECT_NE(prompt.find(*one[0].steps[t].gt.gt_state), std::string::npos);
    EXPECT_EQ(prompt.find("Click("), std::string::npos);
    EXPECT_EQ(prompt.find("(no actions yet)"), std::string::npos);
  }
  const auto ablate_rec = std::make_shared<test_util::RecordingBackend>(base.coordinator);
  b.coordinator = ablate_rec;
  run_fixture(small, b, LoopMode::NoStateTracker);
  for (const auto& req : ablate_rec->requests()) {
    const auto& prompt = req.messages.front().content;
    EXPECT_EQ(prompt.find("subgoals"), std::string::npos);
    EXPECT_EQ(prompt.find(kInitialStateText), std::string::npos);
    const auto parts = split_key(req.context_key);
    const auto& history = parts.back();
    EXPECT_LE(std::count(history.begin(), history.end(), '\n'), 3);
  }
}

TEST(RunEpisode, NoCoordinatorPassesInstructionThrough) {
  const auto fx = standard_fixture();
  const auto base = oracle_backends(fx.world, fx.tasks);
  // Unknown instructions fall back to Complete so the episode records a step.
  const auto rec = std::make_shared<test_util::RecordingBackend>(std::make_shared<ScriptedBackend>(
      AgentRole::Executor, grounding_executor_table(fx.world),
      canonical_executor_output("Complete the task", Action::simple(ActionType::Complete))));
  Backends b;
  b.executor = rec;
  b.state_tracker = std::make_shared<ScriptedBackend>(
      AgentRole::StateTracker, ScriptTable{}, tracker_response("Task in progress"));
  const Fixture small{fx.world, {fx.tasks.front()}};
  const auto trajs = run_fixture(small, b, LoopMode::NoCoordinator);
  ASSERT_FALSE(rec->requests().empty());
  const auto parts = split_key(rec->requests().front().context_key);
  EXPECT_EQ(parts.front(), fx.tasks.front().steps.front().observation.screen_id);
  EXPECT_EQ(parts.back(), fx.tasks.front().instruction);
  ASSERT_FALSE(trajs.front().steps.empty()) << trajs.front().error.value_or("");
  EXPECT_FALSE(trajs.front().steps.front().coordinator_raw);
}

TEST(RunEpisode, BackendFailureEndsWithEnvError) {
  const World w = build_world(test_util::chain_world_spec());
  const auto task = chain_task(w);
  Backends b = oracle_backends(w, {task});
  b.executor = std::make_shared<ScriptedBackend>(AgentRole::Executor, ScriptTable{});
  WorldEnv env(w, "a");
  Rng rng(1);
  const auto traj = run_episode(task, env, b, LoopConfig{}, RewardConfig{}, rng);
  EXPECT_EQ(traj.status, TrajectoryStatus::EnvError);
  ASSERT_TRUE(traj.error);
  EXPECT_EQ(traj.error->rfind("BackendFailure", 0), 0u);
}

TEST(RunEpisode, UnparsedExecutorOutputIsNoOp) {
  const World w = build_world(test_util::chain_world_spec());
  const auto task = chain_task(w);
  Backends b = oracle_backends(w, {task});
  b.executor = std::make_shared<ScriptedBackend>(AgentRole::Executor, ScriptTable{}, "garbage");
  b.state_tracker = std::make_shared<ScriptedBackend>(AgentRole::StateTracker, ScriptTable{},
                                                      tracker_response("same"));
  LoopConfig loop;
  loop.max_steps = 4;
  WorldEnv env(w, "a");
  Rng rng(1);
  const auto traj = run_episode(task, env, b, loop, RewardConfig{}, rng);
  EXPECT_EQ(traj.status, TrajectoryStatus::Truncated);
  EXPECT_EQ(env.screen_id(), "a");
  for (const auto& s : traj.steps) {
    EXPECT_FALSE(s.executor.parse_ok);
    EXPECT_DOUBLE_EQ(s.reward->total, 0.0);
  }
}

TEST(RunSuite, DeterministicAndParallelismIndependent) {
  const auto fx = standard_fixture();
  const auto coord = build_toy_coordinator(fx.world, fx.tasks, 8, 3);
  Backends b = oracle_backends(fx.world, fx.tasks);
  b.coordinator = std::make_shared<ToyBackend>(coord, false, coordinator_response("Go back"));
  const auto one = run_fixture(fx, b, LoopMode::Full, 1);
  const auto again = run_fixture(fx, b, LoopMode::Full, 1);
  const auto four = run_fixture(fx, b, LoopMode::Full, 4);
  EXPECT_EQ(Json(one).dump(), Json(again).dump());
  EXPECT_EQ(Json(one).dump(), Json(four).dump());
}

TEST(RecomputeRewards, BitIdenticalFromLogs) {
  const auto fx = standard_fixture();
  const auto coord = build_toy_coordinator(fx.world, fx.tasks, 8, 3);
  Backends b = oracle_backends(fx.world, fx.tasks);
  b.coordinator = std::make_shared<ToyBackend>(coord, false, coordinator_response("Go back"));
  const auto trajs = run_fixture(fx, b, LoopMode::Full);
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    const auto reparsed = Json::parse(Json(trajs[i]).dump()).get<Trajectory>();
    const auto again = recompute_rewards(reparsed, fx.tasks[i], RewardConfig{});
    ASSERT_EQ(again.size(), trajs[i].steps.size());
    for (std::size_t t = 0; t < again.size(); ++t) EXPECT_EQ(again[t], trajs[i].steps[t].reward);
    EXPECT_TRUE(validate_trajectory(trajs[i]).empty());
  }
}

TEST(LoopConfig, Validation) {
  LoopConfig c;
  c.max_steps = 0;
  EXPECT_THROW(c.validate(), Error);
  EXPECT_EQ(loop_mode_from_string("no-state-tracker"), LoopMode::NoStateTracker);
  EXPECT_FALSE(loop_mode_from_string("bogus"));
}
