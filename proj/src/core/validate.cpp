#include "ces/core/validate.hpp"

#include <set>

namespace ces {

namespace {

std::string step_prefix(std::size_t i) { return "step " + std::to_string(i) + ": "; }

void check_gt(const GroundTruthStep& gt, const std::string& prefix, std::vector<std::string>& out) {
  const std::string kind(to_string(gt.gt_type));
  const bool needs_bbox = is_point_bearing(gt.gt_type);
  if (needs_bbox && !gt.gt_bbox) out.push_back(prefix + kind + " without bbox");
  if (!needs_bbox && gt.gt_bbox) out.push_back(prefix + kind + " with unexpected bbox");
  if (gt.gt_bbox && !gt.gt_bbox->valid()) out.push_back(prefix + "degenerate bbox");
  const bool needs_text = gt.gt_type == ActionType::TypeText;
  if (needs_text && !gt.gt_text) out.push_back(prefix + kind + " without text");
  if (!needs_text && gt.gt_text) out.push_back(prefix + kind + " with unexpected text");
  const bool needs_dir = gt.gt_type == ActionType::Scroll;
  if (needs_dir && !gt.gt_direction) out.push_back(prefix + kind + " without direction");
  if (!needs_dir && gt.gt_direction) out.push_back(prefix + kind + " with unexpected direction");
}

}  // namespace

std::vector<std::string> validate_observation(const Observation& obs) {
  std::vector<std::string> out;
  if (obs.screen_id.empty()) out.push_back("observation: empty screen_id");
  const BBox frame{0, 0, obs.width, obs.height};
  std::set<std::string> ids;
  for (const auto& e : obs.elements) {
    if (!ids.insert(e.element_id).second) {
      out.push_back("observation " + obs.screen_id + ": duplicate element_id " + e.element_id);
    }
    if (!e.bbox.valid()) {
      out.push_back("observation " + obs.screen_id + ": element " + e.element_id +
                    " has degenerate bbox");
    }
    if (obs.width > 0 && obs.height > 0 && !frame.contains(e.bbox)) {
      out.push_back("observation " + obs.screen_id + ": element " + e.element_id +
                    " outside screen");
    }
  }
  return out;
}

std::vector<std::string> validate_task(const TaskRecord& task) {
  std::vector<std::string> out;
  if (task.task_id.empty()) out.push_back("task_id empty");
  if (task.steps.empty()) {
    out.push_back("steps empty");
    return out;
  }
  for (std::size_t i = 0; i < task.steps.size(); ++i) {
    const auto prefix = step_prefix(i);
    check_gt(task.steps[i].gt, prefix, out);
    for (const auto& v : validate_observation(task.steps[i].observation)) out.push_back(prefix + v);
  }
  auto it = task.metadata.find("terminating");
  const bool terminating = it == task.metadata.end() || it->second != "false";
  if (terminating && !is_terminal(task.steps.back().gt.gt_type)) {
    out.push_back(step_prefix(task.steps.size() - 1) + "final step is not complete or close");
  }
  return out;
}

std::vector<std::string> validate_trajectory(const Trajectory& traj) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < traj.steps.size(); ++i) {
    const auto& s = traj.steps[i];
    const int idx = static_cast<int>(i);
    const auto prefix = step_prefix(i);
    if (s.step_index != idx) out.push_back(prefix + "step_index " + std::to_string(s.step_index));
    if (s.prev_state.step_index != idx) out.push_back(prefix + "prev_state index mismatch");
    if (s.next_state.step_index != idx + 1) out.push_back(prefix + "next_state index mismatch");
    if (s.instruction.text.empty()) out.push_back(prefix + "empty instruction");
    if (s.executor.parse_ok && (!s.executor.think || !s.executor.action)) {
      out.push_back(prefix + "parse_ok without think/action");
    }
  }
  const bool ended = !traj.steps.empty() && traj.steps.back().executor.action &&
                     is_terminal(traj.steps.back().executor.action->kind);
  if ((traj.status == TrajectoryStatus::CompletedByAgent) != ended) {
    out.push_back("status " + std::string(to_string(traj.status)) +
                  (ended ? " but last action is terminal" : " but last action is not terminal"));
  }
  return out;
}

}  // namespace ces
