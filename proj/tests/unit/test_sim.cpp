#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <set>

#include "ces/core/context_keys.hpp"
#include "ces/core/error.hpp"
#include "ces/core/text.hpp"
#include "ces/core/validate.hpp"
#include "ces/sim/grounding.hpp"
#include "ces/sim/oracle.hpp"
#include "ces/sim/scripts.hpp"
#include "ces/sim/tasks.hpp"
#include "ces/sim/toy_policy.hpp"
#include "ces/sim/world.hpp"
#include "test_util.hpp"

using namespace ces;

namespace {

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::InvalidArgument;
}

ToyPolicy one_context_policy(std::vector<double> logits) {
  ToyPolicy p;
  ToyContext c;
  for (std::size_t i = 0; i < logits.size(); ++i) c.payloads.push_back("p" + std::to_string(i));
  c.logits = std::move(logits);
  p.contexts["k"] = c;
  return p;
}

// Exhaustive shortest-path enumeration by DFS over simple paths, for small worlds.
void all_paths(const World& w, const std::string& at, const std::string& goal,
               std::vector<std::string>& seen, std::vector<TransitionKey>& keys,
               std::vector<std::vector<TransitionKey>>& out) {
  if (at == goal) {
    out.push_back(keys);
    return;
  }
  auto edges = w.outgoing(at);
  if (at != w.home_screen) edges.push_back({TransitionKey::simple(KeyKind::PressHome), w.home_screen});
  for (const auto& [key, to] : edges) {
    if (std::find(seen.begin(), seen.end(), to) != seen.end()) continue;
    seen.push_back(to);
    keys.push_back(key);
    all_paths(w, to, goal, seen, keys, out);
    keys.pop_back();
    seen.pop_back();
  }
}

}  // namespace

TEST(World, GenerationIsDeterministic) {
  const World a = generate_world(7, WorldParams{});
  const World b = generate_world(7, WorldParams{});
  EXPECT_EQ(Json(a).dump(), Json(b).dump());
  EXPECT_EQ(a.screens.size(), 12u);
  EXPECT_TRUE(world_violations(a).empty());
}

TEST(World, DifferentSeedsDiffer) {
  const auto fa = text::fnv1a(Json(generate_world(7, WorldParams{})).dump());
  const auto fb = text::fnv1a(Json(generate_world(8, WorldParams{})).dump());
  EXPECT_NE(fa, fb);
  EXPECT_EQ(world_fingerprint(generate_world(7, WorldParams{})), fa);
}

TEST(World, SpecRoundTripAndDanglingTarget) {
  const World w = build_world(test_util::chain_world_spec());
  EXPECT_EQ(build_world(Json(w)), w);
  auto spec = test_util::chain_world_spec();
  spec["transitions"].push_back({{"from", "a"}, {"key", "scroll:down"}, {"to", "nowhere"}});
  EXPECT_EQ(code_of([&] { build_world(spec); }), Errc::InvalidSpec);
}

TEST(World, GeneratedWorldHasTwoShortestPathsSomewhere) {
  const World w = generate_world(7, WorldParams{});
  bool found = false;
  for (const auto& [id, _] : w.screens) found = found || count_shortest_paths(w, w.home_screen, id) >= 2;
  EXPECT_TRUE(found);
}

TEST(ApplyAction, ClickInsideElementFollowsTransition) {
  const World w = build_world(test_util::chain_world_spec());
  const auto* el = w.screen("c").find_label("New Meeting");
  ASSERT_NE(el, nullptr);
  const auto r = apply_action(w, "c", Action::click(el->bbox.center().x, el->bbox.center().y));
  EXPECT_EQ(r.next_screen, "d");
  EXPECT_FALSE(r.ended);
}

TEST(ApplyAction, PressHomeAlwaysGoesHome) {
  const World w = generate_world(7, WorldParams{});
  for (const auto& [id, _] : w.screens) {
    EXPECT_EQ(apply_action(w, id, Action::simple(ActionType::PressHome)).next_screen, w.home_screen);
  }
}

TEST(ApplyAction, BackgroundClickIsNoOp) {
  const World w = build_world(test_util::chain_world_spec());
  const auto r = apply_action(w, "c", Action::click(5, 2390));
  EXPECT_EQ(r.next_screen, "c");
  EXPECT_EQ(r.note, "no-op");
  EXPECT_TRUE(apply_action(w, "c", Action::simple(ActionType::Complete)).ended);
  EXPECT_EQ(code_of([&] { apply_action(w, "nope", Action::simple(ActionType::PressBack)); }),
            Errc::UnknownScreen);
}

TEST(Oracle, Examples) {
  const World w = build_world(test_util::chain_world_spec());
  EXPECT_TRUE(oracle_solve(w, "b", "b").empty());
  const auto path = oracle_solve(w, "a", "c");
  std::vector<std::string> seen{"a"};
  std::vector<TransitionKey> keys;
  std::vector<std::vector<TransitionKey>> paths;
  all_paths(w, "a", "c", seen, keys, paths);
  std::size_t shortest = SIZE_MAX;
  for (const auto& p : paths) shortest = std::min(shortest, p.size());
  ASSERT_EQ(path.size(), shortest);
  ASSERT_EQ(path.size(), 2u);
  EXPECT_EQ(path[0].key, TransitionKey::click("e0"));
  EXPECT_EQ(path[1].next, "c");
  EXPECT_EQ(code_of([&] { oracle_solve(w, "a", "z"); }), Errc::Unreachable);
}

TEST(Oracle, ShortestOnGeneratedWorld) {
  const World w = generate_world(7, WorldParams{});
  const auto dist = distances_from(w, w.home_screen);
  for (const auto& [id, d] : dist) {
    const auto path = oracle_solve(w, w.home_screen, id);
    EXPECT_EQ(static_cast<int>(path.size()), d);
    std::string at = w.home_screen;
    for (const auto& step : path) {
      ASSERT_EQ(step.screen, at);
      at = apply_action(w, at, action_for_key(w, at, step.key)).next_screen;
      ASSERT_EQ(at, step.next);
    }
    EXPECT_EQ(at, id);
    EXPECT_EQ(oracle_solve(w, w.home_screen, id), path);
  }
}

TEST(TaskSuite, StandardFixtureExample) {
  const auto fx = standard_fixture();
  ASSERT_EQ(fx.tasks.size(), 20u);
  int repeated = 0;
  for (const auto& t : fx.tasks) {
    std::set<std::string> seen;
    bool rep = false;
    for (std::size_t i = 0; i < t.steps.size(); ++i) {
      for (std::size_t j = i + 2; j < t.steps.size(); ++j) {
        rep = rep || t.steps[i].observation.screen_id == t.steps[j].observation.screen_id;
      }
    }
    repeated += rep;
    EXPECT_EQ(rep, has_nonadjacent_repeat(t));
    EXPECT_GE(t.steps.size(), 8u);
    EXPECT_TRUE(validate_task(t).empty());
    EXPECT_TRUE(replay_violations(fx.world, t).empty()) << t.task_id;
    if (t.metadata.at("confuser") == "true") {
      EXPECT_TRUE(rep);
    }
    for (const auto& s : t.steps) {
      ASSERT_TRUE(s.gt.gt_state);
      ASSERT_TRUE(s.gt.gt_instruction);
    }
  }
  EXPECT_GE(repeated, 10);
}

TEST(TaskSuite, DeterministicAndUnsatisfiable) {
  const World w = generate_world(7, WorldParams{});
  TaskSuiteParams p;
  EXPECT_EQ(Json(generate_task_suite(w, p)).dump(), Json(generate_task_suite(w, p)).dump());
  p.min_len = max_task_length(w, p.max_subgoals) + 1;
  EXPECT_EQ(code_of([&] { generate_task_suite(w, p); }), Errc::Unsatisfiable);
}

TEST(TaskSuite, GroundTruthReplaysToCompletionInWorld) {
  const auto fx = standard_fixture();
  for (const auto& t : fx.tasks) {
    std::string at = t.steps.front().observation.screen_id;
    bool ended = false;
    for (std::size_t i = 0; i < t.steps.size(); ++i) {
      ASSERT_FALSE(ended);
      ASSERT_EQ(at, t.steps[i].observation.screen_id);
      const auto r = apply_action(fx.world, at, t.steps[i].gt.canonical_action());
      at = r.next_screen;
      ended = r.ended;
    }
    EXPECT_TRUE(ended);
  }
}

TEST(Grounding, InstructionsResolveOnTheirScreen) {
  const auto fx = standard_fixture();
  for (const auto& t : fx.tasks) {
    for (const auto& s : t.steps) {
      const auto a = ground_instruction(*s.gt.gt_instruction, s.observation);
      ASSERT_TRUE(a) << *s.gt.gt_instruction;
      EXPECT_EQ(a->kind, s.gt.gt_type);
      if (s.gt.gt_bbox) {
        ASSERT_TRUE(a->point);
        EXPECT_TRUE(s.gt.gt_bbox->contains(*a->point));
      }
    }
  }
  EXPECT_FALSE(ground_instruction("Tap 'No Such Label'", fx.world.screen(fx.world.home_screen)));
}

TEST(ToyPolicy, UniformAndDominantSampling) {
  const auto uniform = one_context_policy(std::vector<double>(8, 0.0));
  for (double p : uniform.probabilities("k")) EXPECT_NEAR(p, 0.125, 1e-12);
  auto dominant = one_context_policy(std::vector<double>(8, 0.0));
  dominant.contexts["k"].logits[3] = 20.0;
  const double p3 = dominant.probabilities("k")[3];
  EXPECT_NEAR(p3, 1.0 / (1.0 + 7.0 * std::exp(-20.0)), 1e-12);
  EXPECT_GT(p3, 0.999);
  Rng rng(1);
  int hits = 0;
  for (int i = 0; i < 2000; ++i) {
    const auto s = toy_sample(dominant, "k", rng);
    hits += s.index == 3;
    ASSERT_NEAR(s.logp, dominant.log_probabilities("k")[s.index], 1e-12);
  }
  EXPECT_GE(hits, 1995);
  EXPECT_EQ(code_of([&] { toy_sample(uniform, "missing", rng); }), Errc::UnknownContext);
}

TEST(ToyPolicy, TemperatureScalesLogits) {
  auto p = one_context_policy({1.0, 0.0});
  p.temperature = 2.0;
  const double want = std::exp(0.5) / (std::exp(0.5) + 1.0);
  EXPECT_NEAR(p.probabilities("k")[0], want, 1e-12);
}

TEST(ToyUpdate, ZeroAdvantagesAndZeroLrAreIdentity) {
  const auto p = one_context_policy({0.1, -0.2, 0.3, 0.0});
  CandidateGroup g;
  g.context_key = "k";
  const auto lp = p.log_probabilities("k");
  for (int i = 0; i < 4; ++i) g.candidates.push_back({"p" + std::to_string(i), 0.5, lp[i], lp[i], lp[i]});
  g.compute_advantages(1e-6);
  EXPECT_EQ(toy_update(p, {g}, GrpoConfig{}, 1.0), p);
  g.advantages = std::vector<double>{1, -1, 0.5, -0.5};
  EXPECT_EQ(toy_update(p, {g}, GrpoConfig{}, 0.0), p);
}

TEST(ToyUpdate, RewardedLogitIncreases) {
  const auto p = one_context_policy(std::vector<double>(4, 0.0));
  CandidateGroup g;
  g.context_key = "k";
  const double lp = std::log(0.25);
  for (int i = 0; i < 4; ++i) g.candidates.push_back({"p" + std::to_string(i), 0.0, lp, lp, lp});
  g.advantages = std::vector<double>{1, -1, -1, -1};
  const auto grad = toy_gradient(p, {g}, GrpoConfig{});
  EXPECT_GT(grad.at("k")[0], 0.0);
  const auto q = toy_update(p, {g}, GrpoConfig{}, 0.5);
  EXPECT_GT(q.contexts.at("k").logits[0], p.contexts.at("k").logits[0]);
}

TEST(ToyGradient, MatchesCentralFiniteDifferences) {
  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    ToyPolicy p;
    p.temperature = 0.5 + rng.uniform();
    std::vector<CandidateGroup> groups;
    for (int c = 0; c < 3; ++c) {
      const std::string key = "ctx" + std::to_string(c);
      ToyContext ctx;
      for (int j = 0; j < 6; ++j) {
        ctx.payloads.push_back("p" + std::to_string(j));
        ctx.logits.push_back(rng.uniform() * 2 - 1);
      }
      p.contexts[key] = ctx;
      CandidateGroup g;
      g.context_key = key;
      const auto lp = p.log_probabilities(key);
      for (int i = 0; i < 4; ++i) {
        const auto j = rng.below(6);
        // Old log-probs near the current ones keep ratios away from clip kinks.
        g.candidates.push_back({ctx.payloads[j], rng.uniform(), lp[j], lp[j] + 0.01 * (rng.uniform() - 0.5),
                                lp[j] - 0.2});
      }
      g.compute_advantages(1e-6);
      groups.push_back(g);
    }
    GrpoConfig cfg;
    cfg.kl_beta = trial % 2 ? 0.04 : 0.0;
    const auto grad = toy_gradient(p, groups, cfg);
    const double h = 1e-5;
    for (const auto& [key, ctx] : p.contexts) {
      for (std::size_t j = 0; j < ctx.logits.size(); ++j) {
        auto up = p;
        auto down = p;
        up.contexts[key].logits[j] += h;
        down.contexts[key].logits[j] -= h;
        const double fd = (toy_objective(up, groups, cfg) - toy_objective(down, groups, cfg)) / (2 * h);
        const double an = grad.at(key)[j];
        const double denom = std::max({std::abs(an), std::abs(fd), 1e-3});
        ASSERT_LT(std::abs(an - fd) / denom, 1e-4) << key << " " << j;
      }
    }
  }
}

TEST(Scripts, ToyPoliciesContainGroundTruth) {
  const auto fx = standard_fixture();
  const auto coord = build_toy_coordinator(fx.world, fx.tasks, kStandardCandidates, 7);
  const auto tracker = build_toy_tracker(fx.tasks, kStandardCandidates, 7);
  for (const auto& [key, ctx] : coord.contexts) {
    EXPECT_EQ(ctx.payloads.size(), static_cast<std::size_t>(kStandardCandidates));
    EXPECT_EQ(std::set<std::string>(ctx.payloads.begin(), ctx.payloads.end()).size(), ctx.payloads.size());
  }
  for (const auto& t : fx.tasks) {
    for (std::size_t i = 1; i < t.steps.size(); ++i) {
      const auto key = tracker_key(t.instruction, *t.steps[i - 1].gt.gt_state,
                                   gt_executor_output(t.steps[i - 1]));
      ASSERT_TRUE(tracker.knows(key));
      EXPECT_TRUE(tracker.index_of(key, tracker_response(*t.steps[i].gt.gt_state)));
    }
  }
  EXPECT_EQ(Json::parse(Json(coord).dump()).get<ToyPolicy>(), coord);
}
