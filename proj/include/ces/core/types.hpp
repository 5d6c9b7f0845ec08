#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ces {

enum class ActionType {
  Complete,
  Close,
  PressHome,
  Click,
  PressBack,
  TypeText,
  Select,
  Scroll,
  Enter,
  LongPress,
};

inline constexpr ActionType kAllActionTypes[] = {
    ActionType::Complete, ActionType::Close,    ActionType::PressHome, ActionType::Click,
    ActionType::PressBack, ActionType::TypeText, ActionType::Select,   ActionType::Scroll,
    ActionType::Enter,    ActionType::LongPress,
};

enum class Direction { Up, Down, Left, Right };

inline constexpr Direction kAllDirections[] = {Direction::Up, Direction::Down, Direction::Left,
                                               Direction::Right};

enum class AgentRole { Coordinator, Executor, StateTracker };

// Canonical snake_case names used on the wire: "press_home", "type", "long_press", ...
std::string_view to_string(ActionType type);
std::optional<ActionType> action_type_from_string(std::string_view name);
std::string_view to_string(Direction dir);
// Case-insensitive.
std::optional<Direction> direction_from_string(std::string_view name);
std::string_view to_string(AgentRole role);
std::optional<AgentRole> agent_role_from_string(std::string_view name);

// Point-bearing kinds carry a screen coordinate: Click, LongPress, Select.
bool is_point_bearing(ActionType type);
// Complete and Close end an episode.
bool is_terminal(ActionType type);

struct Point {
  int x = 0;
  int y = 0;
  auto operator<=>(const Point&) const = default;
};

struct BBox {
  int left = 0;
  int top = 0;
  int right = 0;
  int bottom = 0;

  bool valid() const { return left < right && top < bottom; }
  // Inclusive on all four edges.
  bool contains(Point p) const {
    return left <= p.x && p.x <= right && top <= p.y && p.y <= bottom;
  }
  bool contains(const BBox& other) const {
    return left <= other.left && other.right <= right && top <= other.top &&
           other.bottom <= bottom;
  }
  Point center() const { return {(left + right) / 2, (top + bottom) / 2}; }
  auto operator<=>(const BBox&) const = default;
};

inline bool bbox_contains(const BBox& b, Point p) { return b.contains(p); }

struct Action {
  ActionType kind = ActionType::Complete;
  std::optional<Point> point;
  std::optional<std::string> input_text;
  std::optional<Direction> direction;

  bool operator==(const Action&) const = default;

  static Action simple(ActionType kind) { return Action{kind, {}, {}, {}}; }
  static Action click(int x, int y) { return Action{ActionType::Click, Point{x, y}, {}, {}}; }
  static Action long_press(int x, int y) {
    return Action{ActionType::LongPress, Point{x, y}, {}, {}};
  }
  static Action select(int x, int y) { return Action{ActionType::Select, Point{x, y}, {}, {}}; }
  static Action type_text(std::string text) {
    return Action{ActionType::TypeText, {}, std::move(text), {}};
  }
  static Action scroll(Direction dir) { return Action{ActionType::Scroll, {}, {}, dir}; }
};

struct ScreenSize {
  int width = 0;
  int height = 0;
  bool known() const { return width > 0 && height > 0; }
  auto operator<=>(const ScreenSize&) const = default;
};

// Empty when the action satisfies the parameter invariants (and the bounds
// check, when a screen size is known).
std::vector<std::string> action_violations(const Action& action, ScreenSize screen = {});

// Compact form used in action histories: "Click(520,1130)", "Scroll(down)".
std::string describe(const Action& action);

struct UiElement {
  std::string element_id;
  std::string label;
  BBox bbox;
  bool operator==(const UiElement&) const = default;
};

struct Observation {
  std::string screen_id;
  int width = 0;
  int height = 0;
  std::vector<UiElement> elements;
  std::optional<std::string> image_ref;
  bool is_terminal = false;

  bool operator==(const Observation&) const = default;

  ScreenSize size() const { return {width, height}; }
  const UiElement* find_element(std::string_view element_id) const;
  const UiElement* find_label(std::string_view label) const;
  // First element (in list order) whose bbox contains p.
  const UiElement* hit_test(Point p) const;
};

struct GroundTruthStep {
  ActionType gt_type = ActionType::Complete;
  std::optional<BBox> gt_bbox;
  std::optional<std::string> gt_text;
  std::optional<Direction> gt_direction;
  std::optional<std::string> gt_state;        // m_gt before this step
  std::optional<std::string> gt_instruction;  // annotated atomic instruction

  bool operator==(const GroundTruthStep&) const = default;

  // Canonical action that satisfies this step: point-bearing kinds target the
  // bbox center.
  Action canonical_action() const;
};

struct TaskStep {
  Observation observation;
  GroundTruthStep gt;
  bool operator==(const TaskStep&) const = default;
};

struct TaskRecord {
  std::string task_id;
  std::string instruction;
  std::vector<TaskStep> steps;
  std::map<std::string, std::string> metadata;
  bool operator==(const TaskRecord&) const = default;
};

struct StateSummary {
  std::string text;
  int step_index = 0;
  bool operator==(const StateSummary&) const = default;
};

struct AtomicInstruction {
  std::string text;
  int step_index = 0;
  bool operator==(const AtomicInstruction&) const = default;
};

struct ExecutorOutput {
  std::string raw;
  std::optional<std::string> think;
  std::optional<Action> action;
  bool parse_ok = false;
  std::optional<std::string> error;
  bool operator==(const ExecutorOutput&) const = default;
};

struct RewardBreakdown {
  int r_format = 0;
  int r_type = 0;
  int r_param = 0;
  double r_executor = 0.0;
  double total = 0.0;
  bool operator==(const RewardBreakdown&) const = default;
};

struct StepLog {
  int step_index = 0;
  std::string observation_ref;
  ScreenSize screen;
  StateSummary prev_state;
  std::optional<std::string> coordinator_raw;
  AtomicInstruction instruction;
  ExecutorOutput executor;
  std::optional<std::string> state_tracker_raw;
  StateSummary next_state;
  std::optional<RewardBreakdown> reward;
  bool operator==(const StepLog&) const = default;
};

enum class TrajectoryStatus { CompletedByAgent, Truncated, EnvError };
std::string_view to_string(TrajectoryStatus status);
std::optional<TrajectoryStatus> trajectory_status_from_string(std::string_view name);

struct Trajectory {
  std::string task_id;
  std::string mode;
  std::vector<StepLog> steps;
  TrajectoryStatus status = TrajectoryStatus::Truncated;
  std::optional<std::string> error;
  bool operator==(const Trajectory&) const = default;
};

struct RewardConfig {
  double alpha1 = 0.1;  // format weight
  double alpha2 = 0.9;  // executor weight
  double gamma1 = 0.2;  // type weight
  double gamma2 = 0.8;  // param weight
  double f1_threshold = 0.5;

  bool operator==(const RewardConfig&) const = default;
  // Throws Error(InvalidArgument) on a violated invariant.
  void validate() const;
};

struct GrpoConfig {
  double clip_epsilon = 0.2;
  double kl_beta = 0.0;
  int group_size = 4;
  double std_floor = 1e-6;

  bool operator==(const GrpoConfig&) const = default;
  void validate() const;
};

inline constexpr std::string_view kInitialStateText = "Task started; nothing done yet.";

}  // namespace ces
