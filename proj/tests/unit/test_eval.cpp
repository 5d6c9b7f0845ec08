#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

#include "ces/core/error.hpp"
#include "ces/core/serialize.hpp"
#include "ces/eval/ingest.hpp"
#include "ces/eval/metrics.hpp"
#include "ces/eval/probe.hpp"
#include "ces/sim/scripts.hpp"
#include "test_util.hpp"

using namespace ces;

namespace {

GroundTruthStep click_gt() {
  GroundTruthStep g;
  g.gt_type = ActionType::Click;
  g.gt_bbox = BBox{500, 1100, 600, 1200};
  return g;
}

GroundTruthStep type_gt(const std::string& text) {
  GroundTruthStep g;
  g.gt_type = ActionType::TypeText;
  g.gt_text = text;
  return g;
}

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::InvalidArgument;
}

}  // namespace

TEST(EvalStep, Examples) {
  EXPECT_EQ(eval_step(Action::click(520, 1130), click_gt()), (StepVerdict{true, true, true}));
  EXPECT_EQ(eval_step(Action::click(10, 10), click_gt()), (StepVerdict{true, false, false}));
  EXPECT_EQ(eval_step(Action::simple(ActionType::PressBack), click_gt()),
            (StepVerdict{false, false, false}));
  EXPECT_EQ(eval_step(std::nullopt, click_gt()), (StepVerdict{false, false, false}));
  // F1 of "sign in" against five gt tokens: 2 * 1 * 0.4 / 1.4 = 0.571 > 0.5.
  EXPECT_EQ(eval_step(Action::type_text("sign in"), type_gt("sign in to your account")),
            (StepVerdict{true, std::nullopt, true}));
  EXPECT_EQ(eval_step(Action::type_text("sign"), type_gt("sign in to your account")),
            (StepVerdict{true, std::nullopt, false}));
  // F1 exactly 0.5 is not enough.
  EXPECT_FALSE(eval_step(Action::type_text("a"), type_gt("a b c")).sr_ok);
  GroundTruthStep scroll;
  scroll.gt_type = ActionType::Scroll;
  scroll.gt_direction = Direction::Down;
  EXPECT_TRUE(eval_step(Action::scroll(Direction::Down), scroll).sr_ok);
  EXPECT_FALSE(eval_step(Action::scroll(Direction::Up), scroll).sr_ok);
  EXPECT_FALSE(eval_step(Action::scroll(Direction::Up), scroll).gr_ok);
}

TEST(Score, FourStepFixture) {
  const auto tasks = read_jsonl_as<TaskRecord>(test_util::fixture("eval4_tasks.jsonl"));
  const auto preds = read_jsonl_as<Trajectory>(test_util::fixture("eval4_pred.jsonl"));
  const auto verdicts = score_trajectories(preds, tasks);
  const auto r = aggregate(verdicts, "full");
  EXPECT_EQ(r.suite.type, (MetricCount{3, 4}));
  EXPECT_EQ(r.suite.gr, (MetricCount{1, 2}));
  EXPECT_EQ(r.suite.sr, (MetricCount{2, 4}));
  EXPECT_DOUBLE_EQ(*r.suite.type.percent(), 75.0);
  EXPECT_DOUBLE_EQ(*r.suite.gr.percent(), 50.0);
  EXPECT_DOUBLE_EQ(*r.suite.sr.percent(), 50.0);
  const auto j = report_json(r);
  EXPECT_DOUBLE_EQ(j.at("suite").at("type").at("percent").get<double>(), 75.0);
  const auto table = report_table(r);
  EXPECT_NE(table.find("75.00 (3/4)"), std::string::npos);
  EXPECT_NE(table.find("50.00 (1/2)"), std::string::npos);
}

TEST(Score, MissingPredictionCountsAsFailure) {
  const auto tasks = read_jsonl_as<TaskRecord>(test_util::fixture("eval4_tasks.jsonl"));
  const auto r = aggregate(score_trajectories({}, tasks));
  EXPECT_EQ(r.suite.type, (MetricCount{0, 4}));
  EXPECT_EQ(r.suite.gr, (MetricCount{0, 2}));
}

TEST(Aggregate, UndefinedGroundingIsNull) {
  TaskVerdicts tv{"t", {{true, std::nullopt, true}, {false, std::nullopt, false}}, std::nullopt};
  const auto r = aggregate({tv});
  EXPECT_FALSE(r.suite.gr.percent());
  EXPECT_TRUE(report_json(r).at("suite").at("gr").at("percent").is_null());
  EXPECT_NE(report_table(r).find("n/a (0/0)"), std::string::npos);
  EXPECT_EQ(code_of([] { aggregate({}); }), Errc::EmptyInput);
}

TEST(Aggregate, PermutationInvariant) {
  Rng rng(5);
  std::vector<TaskVerdicts> vs;
  for (int t = 0; t < 30; ++t) {
    TaskVerdicts tv;
    tv.task_id = "t" + std::to_string(t);
    const auto n = 1 + rng.below(8);
    for (std::size_t k = 0; k < n; ++k) {
      StepVerdict v;
      v.type_ok = rng.uniform() < 0.7;
      if (rng.uniform() < 0.6) v.gr_ok = v.type_ok && rng.uniform() < 0.5;
      v.sr_ok = v.type_ok && rng.uniform() < 0.5;
      tv.steps.push_back(v);
    }
    tv.episode_success = rng.uniform() < 0.3;
    vs.push_back(tv);
  }
  const auto base = aggregate(vs);
  for (int i = 0; i < 10; ++i) {
    rng.shuffle(vs);
    EXPECT_EQ(aggregate(vs), base);
  }
  // Suite counts are the sums of per-task counts.
  long type = 0, defined = 0;
  for (const auto& [id, s] : base.per_task) {
    type += s.type.correct;
    defined += s.type.defined;
  }
  EXPECT_EQ(base.suite.type, (MetricCount{type, defined}));
}

TEST(Ingest, DescriptorFile) {
  const auto schema =
      SchemaDescriptor::from_json(Json::parse(read_file(test_util::fixture("bench_descriptor.json"))));
  const auto r = ingest_benchmark(test_util::fixture("bench3.jsonl"), schema);
  ASSERT_EQ(r.tasks.size(), 3u);
  EXPECT_EQ(r.skipped, 0u);
  const auto& ep1 = r.tasks[0];
  EXPECT_EQ(ep1.task_id, "ep1");
  EXPECT_EQ(ep1.instruction, "Open the display settings");
  ASSERT_EQ(ep1.steps.size(), 3u);
  EXPECT_EQ(ep1.steps[0].gt.gt_type, ActionType::Click);
  EXPECT_EQ(*ep1.steps[0].gt.gt_bbox, (BBox{40, 300, 1040, 420}));
  EXPECT_EQ(ep1.steps[1].gt.gt_type, ActionType::Scroll);
  EXPECT_EQ(*ep1.steps[1].gt.gt_direction, Direction::Down);
  EXPECT_EQ(ep1.steps[2].gt.gt_type, ActionType::Complete);
  EXPECT_EQ(*ep1.steps[0].gt.gt_state, "Nothing done yet.");
  EXPECT_EQ(ep1.steps[0].observation.width, 1080);
}

TEST(Ingest, SkipsInvalidRecords) {
  const auto schema =
      SchemaDescriptor::from_json(Json::parse(read_file(test_util::fixture("bench_descriptor.json"))));
  const auto r = ingest_benchmark(test_util::fixture("bench_skip.jsonl"), schema);
  EXPECT_EQ(r.tasks.size(), 3u);
  EXPECT_EQ(r.skipped, 1u);
  ASSERT_EQ(r.skip_reasons.size(), 1u);
  EXPECT_EQ(r.skip_reasons[0].rfind("line 2", 0), 0u);
}

TEST(Ingest, Errors) {
  const auto absent = SchemaDescriptor::from_json(
      Json::parse(read_file(test_util::fixture("bench_descriptor_absent.json"))));
  EXPECT_EQ(code_of([&] { ingest_benchmark(test_util::fixture("bench3.jsonl"), absent); }),
            Errc::UnknownSchemaField);
  EXPECT_EQ(code_of([] {
              SchemaDescriptor::from_json(Json{{"fields", {{"colour", "c"}}}});
            }),
            Errc::UnknownSchemaField);
  EXPECT_EQ(code_of([] {
              ingest_benchmark("/nonexistent/bench.jsonl", SchemaDescriptor::canonical());
            }),
            Errc::IoError);
}

TEST(Probe, PerfectJudgeIsExact) {
  const auto seqs = screen_sequences(probe_fixture().tasks);
  const auto r = temporal_probe(seqs, PerfectJudge{}, 12, 200, 3);
  ASSERT_EQ(r.intervals.size(), 12u);
  for (const auto& s : r.intervals) {
    EXPECT_EQ(s.n_pairs, 200);
    EXPECT_DOUBLE_EQ(s.accuracy, 1.0);
  }
}

TEST(Probe, WindowJudgeMatchesOracle) {
  const auto seqs = screen_sequences(probe_fixture().tasks);
  const int window = 4;
  const int pairs = 2000;
  const auto r = temporal_probe(seqs, WindowJudge(window), 12, pairs, 9);
  for (int d = 1; d <= 12; ++d) {
    // Oracle: fraction of positions the window covers, the rest a coin flip.
    long total = 0, covered = 0;
    for (const auto& s : seqs) {
      for (std::size_t t = 0; t + d < s.size(); ++t) {
        ++total;
        const std::set<std::string> span(s.begin() + t, s.begin() + t + d + 1);
        covered += s[t] != s[t + d] && static_cast<int>(span.size()) <= window;
      }
    }
    const double p_recall = static_cast<double>(covered) / total;
    const double expected = p_recall + (1.0 - p_recall) / 2.0;
    const double sd = std::sqrt(expected * (1.0 - expected) / pairs + 1e-12);
    EXPECT_NEAR(r.at(d).accuracy, expected, 4.0 * sd + 1e-9) << "d=" << d;
  }
  EXPECT_GT(r.at(1).accuracy, r.at(12).accuracy);
}

TEST(Probe, BackendJudgeParsesReplies) {
  const auto seqs = screen_sequences(probe_fixture().tasks);
  const auto garbage = std::make_shared<test_util::CyclingBackend>(AgentRole::Coordinator,
                                                                   std::vector<std::string>{"maybe"});
  const auto r = temporal_probe(seqs, BackendJudge(garbage), 3, 50, 1);
  for (const auto& s : r.intervals) EXPECT_EQ(s.correct, 0);
  const auto probe_csv_text = probe_csv(r);
  EXPECT_EQ(probe_csv_text.rfind("interval,n,accuracy\n", 0), 0u);
}

TEST(Probe, InsufficientLength) {
  const auto seqs = screen_sequences(probe_fixture().tasks);
  EXPECT_EQ(code_of([&] { temporal_probe(seqs, PerfectJudge{}, 40, 10, 1); }),
            Errc::InsufficientLength);
  EXPECT_EQ(code_of([] { WindowJudge(0); }), Errc::InvalidArgument);
}

TEST(Probe, Deterministic) {
  const auto seqs = screen_sequences(probe_fixture().tasks);
  EXPECT_EQ(temporal_probe(seqs, WindowJudge(4), 6, 100, 2),
            temporal_probe(seqs, WindowJudge(4), 6, 100, 2));
}
