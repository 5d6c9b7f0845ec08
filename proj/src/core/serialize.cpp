#include "ces/core/serialize.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "ces/core/error.hpp"
#include "ces/core/text.hpp"

namespace ces {

namespace {

[[noreturn]] void malformed(const std::string& what) { throw Error(Errc::MalformedRecord, what); }

const Json& field(const Json& j, const char* name) {
  if (!j.is_object()) malformed(std::string("expected object with field '") + name + "'");
  auto it = j.find(name);
  if (it == j.end()) malformed(std::string("missing field '") + name + "'");
  return *it;
}

template <typename T>
std::optional<T> opt_field(const Json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<T>();
}

template <typename T>
void put_opt(Json& j, const char* name, const std::optional<T>& v) {
  if (v) j[name] = *v;
}

ActionType parse_action_type(const Json& j) {
  const auto name = j.get<std::string>();
  auto t = action_type_from_string(name);
  if (!t) malformed("unknown action kind '" + name + "'");
  return *t;
}

Direction parse_direction(const Json& j) {
  const auto name = j.get<std::string>();
  auto d = direction_from_string(name);
  if (!d) malformed("unknown direction '" + name + "'");
  return *d;
}

}  // namespace

void to_json(Json& j, const Point& p) { j = Json::array({p.x, p.y}); }
void from_json(const Json& j, Point& p) {
  if (!j.is_array() || j.size() != 2) malformed("point must be [x, y]");
  p = {j[0].get<int>(), j[1].get<int>()};
}

void to_json(Json& j, const BBox& b) { j = Json::array({b.left, b.top, b.right, b.bottom}); }
void from_json(const Json& j, BBox& b) {
  if (!j.is_array() || j.size() != 4) malformed("bbox must be [left, top, right, bottom]");
  b = {j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
}

void to_json(Json& j, const ScreenSize& s) { j = Json::array({s.width, s.height}); }
void from_json(const Json& j, ScreenSize& s) {
  if (!j.is_array() || j.size() != 2) malformed("screen size must be [width, height]");
  s = {j[0].get<int>(), j[1].get<int>()};
}

void to_json(Json& j, const Action& a) {
  j = Json::object();
  j["kind"] = std::string(to_string(a.kind));
  put_opt(j, "point", a.point);
  put_opt(j, "input_text", a.input_text);
  if (a.direction) j["direction"] = std::string(to_string(*a.direction));
}

void from_json(const Json& j, Action& a) {
  a = Action::simple(parse_action_type(field(j, "kind")));
  a.point = opt_field<Point>(j, "point");
  a.input_text = opt_field<std::string>(j, "input_text");
  if (auto it = j.find("direction"); it != j.end() && !it->is_null()) {
    a.direction = parse_direction(*it);
  }
}

void to_json(Json& j, const UiElement& e) {
  j = Json{{"element_id", e.element_id}, {"label", e.label}, {"bbox", e.bbox}};
}
void from_json(const Json& j, UiElement& e) {
  e.element_id = field(j, "element_id").get<std::string>();
  e.label = field(j, "label").get<std::string>();
  e.bbox = field(j, "bbox").get<BBox>();
}

void to_json(Json& j, const Observation& o) {
  j = Json{{"screen_id", o.screen_id},
           {"width", o.width},
           {"height", o.height},
           {"elements", o.elements},
           {"is_terminal", o.is_terminal}};
  put_opt(j, "image_ref", o.image_ref);
}
void from_json(const Json& j, Observation& o) {
  o.screen_id = field(j, "screen_id").get<std::string>();
  o.width = j.value("width", 0);
  o.height = j.value("height", 0);
  o.elements = j.value("elements", std::vector<UiElement>{});
  o.image_ref = opt_field<std::string>(j, "image_ref");
  o.is_terminal = j.value("is_terminal", false);
}

void to_json(Json& j, const GroundTruthStep& g) {
  j = Json::object();
  j["gt_type"] = std::string(to_string(g.gt_type));
  put_opt(j, "gt_bbox", g.gt_bbox);
  put_opt(j, "gt_text", g.gt_text);
  if (g.gt_direction) j["gt_direction"] = std::string(to_string(*g.gt_direction));
  put_opt(j, "gt_state", g.gt_state);
  put_opt(j, "gt_instruction", g.gt_instruction);
}
void from_json(const Json& j, GroundTruthStep& g) {
  g = GroundTruthStep{};
  g.gt_type = parse_action_type(field(j, "gt_type"));
  g.gt_bbox = opt_field<BBox>(j, "gt_bbox");
  g.gt_text = opt_field<std::string>(j, "gt_text");
  if (auto it = j.find("gt_direction"); it != j.end() && !it->is_null()) {
    g.gt_direction = parse_direction(*it);
  }
  g.gt_state = opt_field<std::string>(j, "gt_state");
  g.gt_instruction = opt_field<std::string>(j, "gt_instruction");
}

void to_json(Json& j, const TaskStep& s) {
  j = Json{{"observation", s.observation}, {"gt", s.gt}};
}
void from_json(const Json& j, TaskStep& s) {
  s.observation = field(j, "observation").get<Observation>();
  s.gt = field(j, "gt").get<GroundTruthStep>();
}

void to_json(Json& j, const TaskRecord& t) {
  j = Json{{"task_id", t.task_id},
           {"instruction", t.instruction},
           {"steps", t.steps},
           {"metadata", t.metadata}};
}
void from_json(const Json& j, TaskRecord& t) {
  t.task_id = field(j, "task_id").get<std::string>();
  t.instruction = field(j, "instruction").get<std::string>();
  t.steps = field(j, "steps").get<std::vector<TaskStep>>();
  t.metadata = j.value("metadata", std::map<std::string, std::string>{});
}

void to_json(Json& j, const StateSummary& s) {
  j = Json{{"text", s.text}, {"step_index", s.step_index}};
}
void from_json(const Json& j, StateSummary& s) {
  s.text = field(j, "text").get<std::string>();
  s.step_index = field(j, "step_index").get<int>();
}

void to_json(Json& j, const AtomicInstruction& a) {
  j = Json{{"text", a.text}, {"step_index", a.step_index}};
}
void from_json(const Json& j, AtomicInstruction& a) {
  a.text = field(j, "text").get<std::string>();
  a.step_index = field(j, "step_index").get<int>();
}

void to_json(Json& j, const ExecutorOutput& e) {
  j = Json{{"raw", e.raw}, {"parse_ok", e.parse_ok}};
  put_opt(j, "think", e.think);
  put_opt(j, "action", e.action);
  put_opt(j, "error", e.error);
}
void from_json(const Json& j, ExecutorOutput& e) {
  e.raw = field(j, "raw").get<std::string>();
  e.parse_ok = field(j, "parse_ok").get<bool>();
  e.think = opt_field<std::string>(j, "think");
  e.action = opt_field<Action>(j, "action");
  e.error = opt_field<std::string>(j, "error");
}

void to_json(Json& j, const RewardBreakdown& r) {
  j = Json{{"r_format", r.r_format},
           {"r_type", r.r_type},
           {"r_param", r.r_param},
           {"r_executor", r.r_executor},
           {"total", r.total}};
}
void from_json(const Json& j, RewardBreakdown& r) {
  r.r_format = field(j, "r_format").get<int>();
  r.r_type = field(j, "r_type").get<int>();
  r.r_param = field(j, "r_param").get<int>();
  r.r_executor = field(j, "r_executor").get<double>();
  r.total = field(j, "total").get<double>();
}

void to_json(Json& j, const StepLog& s) {
  j = Json{{"step_index", s.step_index},
           {"observation_ref", s.observation_ref},
           {"screen_size", s.screen},
           {"prev_state", s.prev_state},
           {"instruction", s.instruction},
           {"executor", s.executor},
           {"next_state", s.next_state}};
  put_opt(j, "coordinator_raw", s.coordinator_raw);
  put_opt(j, "state_tracker_raw", s.state_tracker_raw);
  put_opt(j, "reward", s.reward);
}
void from_json(const Json& j, StepLog& s) {
  s.step_index = field(j, "step_index").get<int>();
  s.observation_ref = field(j, "observation_ref").get<std::string>();
  s.screen = j.value("screen_size", ScreenSize{});
  s.prev_state = field(j, "prev_state").get<StateSummary>();
  s.instruction = field(j, "instruction").get<AtomicInstruction>();
  s.executor = field(j, "executor").get<ExecutorOutput>();
  s.next_state = field(j, "next_state").get<StateSummary>();
  s.coordinator_raw = opt_field<std::string>(j, "coordinator_raw");
  s.state_tracker_raw = opt_field<std::string>(j, "state_tracker_raw");
  s.reward = opt_field<RewardBreakdown>(j, "reward");
}

void to_json(Json& j, const Trajectory& t) {
  j = Json{{"task_id", t.task_id},
           {"mode", t.mode},
           {"status", std::string(to_string(t.status))},
           {"steps", t.steps}};
  put_opt(j, "error", t.error);
}
void from_json(const Json& j, Trajectory& t) {
  t.task_id = field(j, "task_id").get<std::string>();
  t.mode = j.value("mode", std::string{});
  const auto status = field(j, "status").get<std::string>();
  auto s = trajectory_status_from_string(status);
  if (!s) malformed("unknown trajectory status '" + status + "'");
  t.status = *s;
  t.steps = field(j, "steps").get<std::vector<StepLog>>();
  t.error = opt_field<std::string>(j, "error");
}

void to_json(Json& j, const RewardConfig& c) {
  j = Json{{"alpha1", c.alpha1},
           {"alpha2", c.alpha2},
           {"gamma1", c.gamma1},
           {"gamma2", c.gamma2},
           {"f1_threshold", c.f1_threshold}};
}
void from_json(const Json& j, RewardConfig& c) {
  reject_unknown_keys(j, {"alpha1", "alpha2", "gamma1", "gamma2", "f1_threshold"}, "reward");
  const RewardConfig d;
  c.alpha1 = j.value("alpha1", d.alpha1);
  c.alpha2 = j.value("alpha2", d.alpha2);
  c.gamma1 = j.value("gamma1", d.gamma1);
  c.gamma2 = j.value("gamma2", d.gamma2);
  c.f1_threshold = j.value("f1_threshold", d.f1_threshold);
}

void to_json(Json& j, const GrpoConfig& c) {
  j = Json{{"clip_epsilon", c.clip_epsilon},
           {"kl_beta", c.kl_beta},
           {"group_size", c.group_size},
           {"std_floor", c.std_floor}};
}
void from_json(const Json& j, GrpoConfig& c) {
  reject_unknown_keys(j, {"clip_epsilon", "kl_beta", "group_size", "std_floor"}, "grpo");
  const GrpoConfig d;
  c.clip_epsilon = j.value("clip_epsilon", d.clip_epsilon);
  c.kl_beta = j.value("kl_beta", d.kl_beta);
  c.group_size = j.value("group_size", d.group_size);
  c.std_floor = j.value("std_floor", d.std_floor);
}

void reject_unknown_keys(const Json& j, const std::vector<std::string>& allowed,
                         std::string_view where) {
  if (!j.is_object()) {
    throw Error(Errc::ConfigError, std::string(where) + ": expected a JSON object");
  }
  for (const auto& [key, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw Error(Errc::ConfigError, std::string(where) + ": unknown key '" + key + "'");
    }
  }
}

std::string dump_line(const Json& j) { return j.dump(-1, ' ', false, Json::error_handler_t::replace); }

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot open '" + path.string() + "' for writing");
  out << content;
  out.flush();
  if (!out) throw Error(Errc::IoError, "write failed for '" + path.string() + "'");
}

std::vector<Json> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open '" + path.string() + "' for reading");
  std::vector<Json> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::is_blank(line)) continue;
    try {
      out.push_back(Json::parse(line));
    } catch (const Json::parse_error& e) {
      throw Error(Errc::MalformedRecord,
                  path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& records) {
  std::string content;
  for (const auto& r : records) {
    content += dump_line(r);
    content.push_back('\n');
  }
  write_file(path, content);
}

}  // namespace ces
