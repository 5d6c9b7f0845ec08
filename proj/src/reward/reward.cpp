#include "ces/reward/reward.hpp"

#include <map>
#include <string>

#include "ces/agent_io/tagged.hpp"
#include "ces/core/log.hpp"
#include "ces/core/text.hpp"

namespace ces {

double token_f1(std::string_view pred, std::string_view gt) {
  const auto p = text::split_whitespace(text::to_lower(pred));
  const auto g = text::split_whitespace(text::to_lower(gt));
  if (p.empty() && g.empty()) return 1.0;
  if (p.empty() || g.empty()) return 0.0;
  std::map<std::string, int> counts;
  for (const auto& t : g) ++counts[t];
  int overlap = 0;
  for (const auto& t : p) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++overlap;
    }
  }
  if (overlap == 0) return 0.0;
  const double precision = static_cast<double>(overlap) / static_cast<double>(p.size());
  const double recall = static_cast<double>(overlap) / static_cast<double>(g.size());
  return 2.0 * precision * recall / (precision + recall);
}

int reward_type(const Action& a, const GroundTruthStep& gt) { return a.kind == gt.gt_type ? 1 : 0; }

int reward_param(const Action& a, const GroundTruthStep& gt, const RewardConfig& cfg) {
  switch (a.kind) {
    case ActionType::Click:
    case ActionType::LongPress:
    case ActionType::Select:
      if (!gt.gt_bbox || !a.point) {
        log::debug("reward_param: point or gt_bbox missing");
        return 0;
      }
      return gt.gt_bbox->contains(*a.point) ? 1 : 0;
    case ActionType::TypeText:
      if (!gt.gt_text || !a.input_text) {
        log::debug("reward_param: input_text or gt_text missing");
        return 0;
      }
      return token_f1(*a.input_text, *gt.gt_text) > cfg.f1_threshold ? 1 : 0;
    case ActionType::Scroll:
      if (!gt.gt_direction || !a.direction) {
        log::debug("reward_param: direction or gt_direction missing");
        return 0;
      }
      return *a.direction == *gt.gt_direction ? 1 : 0;
    default:
      return a.kind == gt.gt_type ? 1 : 0;
  }
}

double reward_executor(const Action& a, const GroundTruthStep& gt, const RewardConfig& cfg) {
  return cfg.gamma1 * reward_type(a, gt) + cfg.gamma2 * reward_param(a, gt, cfg);
}

RewardBreakdown compose_reward(int r_format, int r_type, int r_param, const RewardConfig& cfg) {
  RewardBreakdown r;
  r.r_format = r_format;
  r.r_type = r_type;
  r.r_param = r_param;
  r.r_executor = cfg.gamma1 * r_type + cfg.gamma2 * r_param;
  r.total = cfg.alpha1 * r_format + cfg.alpha2 * r.r_executor;
  return r;
}

RewardBreakdown total_reward(std::string_view raw, const std::optional<Action>& action,
                             const GroundTruthStep& gt, const RewardConfig& cfg) {
  const int fmt = check_format(raw);
  if (!action) return compose_reward(fmt, 0, 0, cfg);
  return compose_reward(fmt, reward_type(*action, gt), reward_param(*action, gt, cfg), cfg);
}

}  // namespace ces
