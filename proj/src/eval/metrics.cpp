#include "ces/eval/metrics.hpp"

#include <iomanip>
#include <sstream>

#include "ces/core/error.hpp"
#include "ces/core/log.hpp"
#include "ces/reward/reward.hpp"

namespace ces {

StepVerdict eval_step(const std::optional<Action>& pred, const GroundTruthStep& gt,
                      const RewardConfig& cfg) {
  StepVerdict v;
  const bool point_bearing = is_point_bearing(gt.gt_type);
  if (point_bearing) v.gr_ok = false;
  if (!pred) return v;
  v.type_ok = pred->kind == gt.gt_type;
  if (point_bearing) v.gr_ok = pred->point && gt.gt_bbox && gt.gt_bbox->contains(*pred->point);
  v.sr_ok = v.type_ok && reward_param(*pred, gt, cfg) == 1;
  return v;
}

std::optional<double> MetricCount::percent() const {
  if (defined == 0) return std::nullopt;
  return 100.0 * static_cast<double>(correct) / static_cast<double>(defined);
}

void MetricSummary::add(const StepVerdict& v) {
  ++type.defined;
  type.correct += v.type_ok;
  if (v.gr_ok) {
    ++gr.defined;
    gr.correct += *v.gr_ok;
  }
  ++sr.defined;
  sr.correct += v.sr_ok;
}

Report aggregate(const std::vector<TaskVerdicts>& verdicts, std::string mode,
                 const RewardConfig& cfg) {
  Report r;
  r.mode = std::move(mode);
  r.config = cfg;
  for (const auto& task : verdicts) {
    auto& per = r.per_task[task.task_id];
    for (const auto& v : task.steps) {
      per.add(v);
      r.suite.add(v);
    }
    ++r.episodes;
    if (task.episode_success) {
      ++r.episodes_scored;
      r.episode_successes += *task.episode_success;
    }
  }
  if (r.suite.type.defined == 0) throw Error(Errc::EmptyInput, "no step verdicts to aggregate");
  return r;
}

namespace {

Json count_json(const MetricCount& c) {
  Json j{{"correct", c.correct}, {"defined", c.defined}, {"percent", nullptr}};
  if (auto p = c.percent()) j["percent"] = *p;
  return j;
}

Json summary_json(const MetricSummary& s) {
  return Json{{"type", count_json(s.type)}, {"gr", count_json(s.gr)}, {"sr", count_json(s.sr)}};
}

std::string cell(const MetricCount& c) {
  std::ostringstream os;
  if (auto p = c.percent()) {
    os << std::fixed << std::setprecision(2) << *p;
  } else {
    os << "n/a";
  }
  os << " (" << c.correct << "/" << c.defined << ")";
  return os.str();
}

}  // namespace

Json report_json(const Report& r) {
  Json per = Json::array();
  for (const auto& [id, s] : r.per_task) {
    Json t = summary_json(s);
    t["task_id"] = id;
    per.push_back(std::move(t));
  }
  return Json{{"mode", r.mode},
              {"config", r.config},
              {"suite", summary_json(r.suite)},
              {"per_task", std::move(per)},
              {"episodes",
               {{"total", r.episodes},
                {"scored", r.episodes_scored},
                {"successes", r.episode_successes}}},
              {"metadata",
               {{"gr_denominator", "point-bearing ground-truth steps (click, long_press, select)"},
                {"unreached_steps", "counted as failures"}}}};
}

std::string report_table(const Report& r) {
  std::ostringstream os;
  os << "mode: " << (r.mode.empty() ? "-" : r.mode) << "\n";
  os << std::left << std::setw(12) << "task" << std::setw(22) << "Type" << std::setw(22) << "GR"
     << "SR\n";
  auto row = [&](const std::string& name, const MetricSummary& s) {
    os << std::left << std::setw(12) << name << std::setw(22) << cell(s.type) << std::setw(22)
       << cell(s.gr) << cell(s.sr) << "\n";
  };
  for (const auto& [id, s] : r.per_task) row(id, s);
  row("ALL", r.suite);
  if (r.episodes_scored > 0) {
    os << "episode success: " << r.episode_successes << "/" << r.episodes_scored << "\n";
  }
  return os.str();
}

bool episode_success(const Trajectory& traj, const TaskRecord& task, const RewardConfig& cfg) {
  if (traj.status != TrajectoryStatus::CompletedByAgent) return false;
  if (traj.steps.size() != task.steps.size()) return false;
  for (std::size_t t = 0; t < task.steps.size(); ++t) {
    if (!eval_step(traj.steps[t].executor.action, task.steps[t].gt, cfg).sr_ok) return false;
  }
  return true;
}

std::vector<TaskVerdicts> score_trajectories(const std::vector<Trajectory>& preds,
                                             const std::vector<TaskRecord>& tasks,
                                             const RewardConfig& cfg) {
  std::map<std::string, const Trajectory*> by_id;
  for (const auto& p : preds) {
    if (!by_id.emplace(p.task_id, &p).second) {
      log::warn("duplicate prediction for " + p.task_id + "; keeping the first");
    }
  }
  std::vector<TaskVerdicts> out;
  for (const auto& task : tasks) {
    TaskVerdicts tv;
    tv.task_id = task.task_id;
    const auto it = by_id.find(task.task_id);
    const Trajectory* traj = it == by_id.end() ? nullptr : it->second;
    for (std::size_t t = 0; t < task.steps.size(); ++t) {
      std::optional<Action> pred;
      if (traj && t < traj->steps.size()) pred = traj->steps[t].executor.action;
      tv.steps.push_back(eval_step(pred, task.steps[t].gt, cfg));
    }
    tv.episode_success = traj && episode_success(*traj, task, cfg);
    if (traj) by_id.erase(it);
    out.push_back(std::move(tv));
  }
  for (const auto& [id, _] : by_id) log::warn("prediction for unknown task " + id + " ignored");
  return out;
}

}  // namespace ces
