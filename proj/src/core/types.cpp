#include "ces/core/types.hpp"

#include <cmath>
#include <sstream>

#include "ces/core/context_keys.hpp"
#include "ces/core/error.hpp"
#include "ces/core/rng.hpp"
#include "ces/core/text.hpp"

namespace ces {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::MissingTag: return "MissingTag";
    case Errc::EmptyBody: return "EmptyBody";
    case Errc::UnknownAction: return "UnknownAction";
    case Errc::MalformedRecord: return "MalformedRecord";
    case Errc::MissingParam: return "MissingParam";
    case Errc::PointOutOfBounds: return "PointOutOfBounds";
    case Errc::UnboundPlaceholder: return "UnboundPlaceholder";
    case Errc::UnknownPlaceholder: return "UnknownPlaceholder";
    case Errc::EmptyGroup: return "EmptyGroup";
    case Errc::NonFinite: return "NonFinite";
    case Errc::MissingLogProb: return "MissingLogProb";
    case Errc::InvalidSpec: return "InvalidSpec";
    case Errc::UnknownScreen: return "UnknownScreen";
    case Errc::Unsatisfiable: return "Unsatisfiable";
    case Errc::Unreachable: return "Unreachable";
    case Errc::UnknownContext: return "UnknownContext";
    case Errc::BackendFailure: return "BackendFailure";
    case Errc::Timeout: return "Timeout";
    case Errc::BackendUnreachable: return "BackendUnreachable";
    case Errc::MalformedResponse: return "MalformedResponse";
    case Errc::MissingGtState: return "MissingGtState";
    case Errc::MissingGtFields: return "MissingGtFields";
    case Errc::IoError: return "IoError";
    case Errc::UnknownSchemaField: return "UnknownSchemaField";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::InsufficientLength: return "InsufficientLength";
    case Errc::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

std::string_view to_string(ActionType type) {
  switch (type) {
    case ActionType::Complete: return "complete";
    case ActionType::Close: return "close";
    case ActionType::PressHome: return "press_home";
    case ActionType::Click: return "click";
    case ActionType::PressBack: return "press_back";
    case ActionType::TypeText: return "type";
    case ActionType::Select: return "select";
    case ActionType::Scroll: return "scroll";
    case ActionType::Enter: return "enter";
    case ActionType::LongPress: return "long_press";
  }
  return "complete";
}

std::optional<ActionType> action_type_from_string(std::string_view name) {
  for (ActionType t : kAllActionTypes) {
    if (to_string(t) == name) return t;
  }
  return std::nullopt;
}

std::string_view to_string(Direction dir) {
  switch (dir) {
    case Direction::Up: return "up";
    case Direction::Down: return "down";
    case Direction::Left: return "left";
    case Direction::Right: return "right";
  }
  return "up";
}

std::optional<Direction> direction_from_string(std::string_view name) {
  const std::string lowered = text::to_lower(text::trim(name));
  for (Direction d : kAllDirections) {
    if (to_string(d) == lowered) return d;
  }
  return std::nullopt;
}

std::string_view to_string(AgentRole role) {
  switch (role) {
    case AgentRole::Coordinator: return "coordinator";
    case AgentRole::Executor: return "executor";
    case AgentRole::StateTracker: return "state_tracker";
  }
  return "coordinator";
}

std::optional<AgentRole> agent_role_from_string(std::string_view name) {
  for (AgentRole r : {AgentRole::Coordinator, AgentRole::Executor, AgentRole::StateTracker}) {
    if (to_string(r) == name) return r;
  }
  return std::nullopt;
}

std::string_view to_string(TrajectoryStatus status) {
  switch (status) {
    case TrajectoryStatus::CompletedByAgent: return "completed_by_agent";
    case TrajectoryStatus::Truncated: return "truncated";
    case TrajectoryStatus::EnvError: return "env_error";
  }
  return "truncated";
}

std::optional<TrajectoryStatus> trajectory_status_from_string(std::string_view name) {
  for (auto s : {TrajectoryStatus::CompletedByAgent, TrajectoryStatus::Truncated,
                 TrajectoryStatus::EnvError}) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

bool is_point_bearing(ActionType type) {
  return type == ActionType::Click || type == ActionType::LongPress || type == ActionType::Select;
}

bool is_terminal(ActionType type) {
  return type == ActionType::Complete || type == ActionType::Close;
}

std::vector<std::string> action_violations(const Action& action, ScreenSize screen) {
  std::vector<std::string> out;
  const std::string kind(to_string(action.kind));
  if (is_point_bearing(action.kind) != action.point.has_value()) {
    out.push_back(kind + (action.point ? ": unexpected point" : ": missing point"));
  }
  if ((action.kind == ActionType::TypeText) != action.input_text.has_value()) {
    out.push_back(kind + (action.input_text ? ": unexpected input_text" : ": missing input_text"));
  }
  if ((action.kind == ActionType::Scroll) != action.direction.has_value()) {
    out.push_back(kind + (action.direction ? ": unexpected direction" : ": missing direction"));
  }
  if (action.point) {
    const Point p = *action.point;
    if (p.x < 0 || p.y < 0 || (screen.known() && (p.x >= screen.width || p.y >= screen.height))) {
      out.push_back(kind + ": point out of bounds");
    }
  }
  return out;
}

std::string describe(const Action& a) {
  std::ostringstream os;
  switch (a.kind) {
    case ActionType::Click:
    case ActionType::LongPress:
    case ActionType::Select: {
      const char* name = a.kind == ActionType::Click       ? "Click"
                         : a.kind == ActionType::LongPress ? "LongPress"
                                                           : "Select";
      os << name << '(';
      if (a.point) os << a.point->x << ',' << a.point->y;
      os << ')';
      break;
    }
    case ActionType::TypeText: os << "Type(\"" << a.input_text.value_or("") << "\")"; break;
    case ActionType::Scroll:
      os << "Scroll(" << (a.direction ? to_string(*a.direction) : "?") << ')';
      break;
    case ActionType::PressHome: os << "PressHome"; break;
    case ActionType::PressBack: os << "PressBack"; break;
    case ActionType::Enter: os << "Enter"; break;
    case ActionType::Complete: os << "Complete"; break;
    case ActionType::Close: os << "Close"; break;
  }
  return os.str();
}

const UiElement* Observation::find_element(std::string_view element_id) const {
  for (const auto& e : elements) {
    if (e.element_id == element_id) return &e;
  }
  return nullptr;
}

const UiElement* Observation::find_label(std::string_view label) const {
  for (const auto& e : elements) {
    if (e.label == label) return &e;
  }
  return nullptr;
}

const UiElement* Observation::hit_test(Point p) const {
  for (const auto& e : elements) {
    if (e.bbox.contains(p)) return &e;
  }
  return nullptr;
}

Action GroundTruthStep::canonical_action() const {
  Action a = Action::simple(gt_type);
  if (is_point_bearing(gt_type) && gt_bbox) a.point = gt_bbox->center();
  if (gt_type == ActionType::TypeText) a.input_text = gt_text.value_or("");
  if (gt_type == ActionType::Scroll) a.direction = gt_direction.value_or(Direction::Down);
  return a;
}

void RewardConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(Errc::InvalidArgument, "reward config: " + m); };
  if (alpha1 < 0 || alpha2 < 0 || gamma1 < 0 || gamma2 < 0) fail("weights must be >= 0");
  if (std::abs(alpha1 + alpha2 - 1.0) > 1e-9) fail("alpha1 + alpha2 must equal 1");
  if (std::abs(gamma1 + gamma2 - 1.0) > 1e-9) fail("gamma1 + gamma2 must equal 1");
  if (!(f1_threshold > 0.0 && f1_threshold < 1.0)) fail("f1_threshold must lie in (0, 1)");
}

void GrpoConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(Errc::InvalidArgument, "grpo config: " + m); };
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0)) fail("clip_epsilon must lie in (0, 1)");
  if (kl_beta < 0.0) fail("kl_beta must be >= 0");
  if (group_size < 1) fail("group_size must be >= 1");
  if (!(std_floor > 0.0)) fail("std_floor must be > 0");
}

std::size_t Rng::below(std::size_t n) {
  if (n == 0) throw Error(Errc::InvalidArgument, "Rng::below(0)");
  // Rejection sampling keeps the draw unbiased.
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
  std::uint64_t x = 0;
  do {
    x = engine_();
  } while (x >= limit);
  return static_cast<std::size_t>(x % bound);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string make_key(const std::vector<std::string_view>& fields) {
  std::string key;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) key.push_back(kKeySeparator);
    key.append(fields[i]);
  }
  return key;
}

std::vector<std::string> split_key(std::string_view key) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = key.find(kKeySeparator, start);
    out.emplace_back(key.substr(start, pos == std::string_view::npos ? key.npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string wildcard_key(std::string_view key) {
  const auto pos = key.rfind(kKeySeparator);
  if (pos == std::string_view::npos) return std::string(kWildcard);
  return std::string(key.substr(0, pos + 1)) + std::string(kWildcard);
}

std::string coordinator_key(std::string_view instruction, std::string_view screen_id,
                            std::string_view context) {
  return make_key({instruction, screen_id, context});
}

std::string executor_key(std::string_view atomic_instruction, std::string_view screen_id) {
  return make_key({screen_id, atomic_instruction});
}

std::string tracker_key(std::string_view instruction, std::string_view prev_state,
                        std::string_view executor_output) {
  return make_key({instruction, prev_state, executor_output});
}

}  // namespace ces
