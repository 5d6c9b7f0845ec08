#include "ces/cli/config.hpp"

#include "ces/agent_io/action_codec.hpp"
#include "ces/core/error.hpp"
#include "ces/sim/scripts.hpp"
#include "ces/sim/toy_policy.hpp"

namespace ces {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void config_error(const std::string& msg) { throw Error(Errc::ConfigError, msg); }

template <typename T>
T get_as(const Json& j, const std::string& where) {
  try {
    return j.get<T>();
  } catch (const Json::exception&) {
    config_error(where + ": unexpected value " + j.dump());
  }
}

fs::path resolve_input(const Json& j, const fs::path& base, const std::string& where) {
  fs::path p = get_as<std::string>(j, where);
  if (p.is_relative()) p = base / p;
  if (!fs::exists(p)) config_error(where + ": " + p.string() + " does not exist");
  return p;
}

LoopConfig parse_loop(const Json& j) {
  reject_unknown_keys(j, {"max_steps", "mode", "history_window", "initial_state_text"}, "loop");
  LoopConfig c;
  if (j.contains("max_steps")) c.max_steps = get_as<int>(j["max_steps"], "loop.max_steps");
  if (j.contains("history_window")) {
    c.history_window = get_as<int>(j["history_window"], "loop.history_window");
  }
  if (j.contains("mode")) {
    const auto name = get_as<std::string>(j["mode"], "loop.mode");
    const auto mode = loop_mode_from_string(name);
    if (!mode) config_error("loop.mode: unknown mode '" + name + "'");
    c.mode = *mode;
  }
  if (j.contains("initial_state_text")) {
    c.initial_state_text = get_as<std::string>(j["initial_state_text"], "loop.initial_state_text");
  }
  c.validate();
  return c;
}

BackendDescriptor parse_backend(const Json& j, const fs::path& base, const std::string& where) {
  if (!j.is_object()) config_error(where + ": expected an object");
  BackendDescriptor d;
  d.kind = get_as<std::string>(j.value("kind", Json("")), where + ".kind");
  if (d.kind == "oracle") {
    reject_unknown_keys(j, {"kind", "default_response"}, where);
  } else if (d.kind == "scripted") {
    reject_unknown_keys(j, {"kind", "table", "default_response"}, where);
    if (!j.contains("table")) config_error(where + ": scripted backend needs a table");
    d.table = resolve_input(j["table"], base, where + ".table");
  } else if (d.kind == "toy") {
    reject_unknown_keys(j, {"kind", "policy", "greedy", "default_response"}, where);
    if (!j.contains("policy")) config_error(where + ": toy backend needs a policy");
    d.policy = resolve_input(j["policy"], base, where + ".policy");
    d.greedy = get_as<bool>(j.value("greedy", Json(false)), where + ".greedy");
  } else if (d.kind == "remote") {
    reject_unknown_keys(j,
                        {"kind", "endpoint", "model", "temperature", "max_tokens", "timeout_ms",
                         "retries", "headers", "api_key_env"},
                        where);
    auto& r = d.remote;
    if (!j.contains("endpoint")) config_error(where + ": remote backend needs an endpoint");
    r.endpoint = get_as<std::string>(j["endpoint"], where + ".endpoint");
    r.model = get_as<std::string>(j.value("model", Json("")), where + ".model");
    r.temperature = get_as<double>(j.value("temperature", Json(r.temperature)), where);
    r.max_tokens = get_as<int>(j.value("max_tokens", Json(r.max_tokens)), where);
    r.timeout_ms = get_as<int>(j.value("timeout_ms", Json(r.timeout_ms)), where);
    r.retries = get_as<int>(j.value("retries", Json(r.retries)), where);
    if (j.contains("headers")) {
      r.headers = get_as<std::map<std::string, std::string>>(j["headers"], where + ".headers");
    }
    r.api_key_env = get_as<std::string>(j.value("api_key_env", Json(r.api_key_env)), where);
  } else {
    config_error(where + ": unknown backend kind '" + d.kind + "'");
  }
  if (j.contains("default_response")) {
    d.default_response = get_as<std::string>(j["default_response"], where + ".default_response");
  }
  return d;
}

}  // namespace

HarnessConfig parse_config(const Json& j, const fs::path& base_dir) {
  if (!j.is_object()) config_error("config must be a JSON object");
  reject_unknown_keys(j, {"seed", "reward", "grpo", "loop", "backends", "paths", "parallelism"},
                      "config");
  HarnessConfig c;
  if (!j.contains("seed")) config_error("config: seed is required");
  c.seed = get_as<std::uint64_t>(j["seed"], "seed");
  try {
    if (j.contains("reward")) c.reward = j["reward"].get<RewardConfig>();
    if (j.contains("grpo")) c.grpo = j["grpo"].get<GrpoConfig>();
    c.reward.validate();
    c.grpo.validate();
  } catch (const Error& e) {
    if (e.code() == Errc::ConfigError) throw;
    config_error(e.what());
  } catch (const Json::exception& e) {
    config_error(e.what());
  }
  if (j.contains("loop")) c.loop = parse_loop(j["loop"]);
  if (j.contains("backends")) {
    const auto& b = j["backends"];
    reject_unknown_keys(b, {"coordinator", "executor", "state_tracker", "judge"}, "backends");
    if (b.contains("coordinator")) {
      c.coordinator = parse_backend(b["coordinator"], base_dir, "backends.coordinator");
    }
    if (b.contains("executor")) c.executor = parse_backend(b["executor"], base_dir, "backends.executor");
    if (b.contains("state_tracker")) {
      c.state_tracker = parse_backend(b["state_tracker"], base_dir, "backends.state_tracker");
    }
    if (b.contains("judge")) c.judge = parse_backend(b["judge"], base_dir, "backends.judge");
  }
  if (j.contains("paths")) {
    const auto& p = j["paths"];
    reject_unknown_keys(p, {"world", "tasks", "templates", "output"}, "paths");
    if (p.contains("world")) c.world = resolve_input(p["world"], base_dir, "paths.world");
    if (p.contains("tasks")) c.tasks = resolve_input(p["tasks"], base_dir, "paths.tasks");
    if (p.contains("templates")) {
      c.templates = resolve_input(p["templates"], base_dir, "paths.templates");
    }
    if (p.contains("output")) {
      fs::path out = get_as<std::string>(p["output"], "paths.output");
      c.output = out.is_relative() ? base_dir / out : out;
    }
  }
  if (j.contains("parallelism")) c.parallelism = get_as<int>(j["parallelism"], "parallelism");
  if (c.parallelism < 1) config_error("parallelism must be >= 1");
  return c;
}

HarnessConfig load_config(const fs::path& path) {
  if (!fs::exists(path)) config_error("config file " + path.string() + " not found");
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const Json::exception& e) {
    config_error(path.string() + ": " + e.what());
  } catch (const Error& e) {
    config_error(e.what());
  }
  return parse_config(j, path.parent_path());
}

std::shared_ptr<const PolicyBackend> make_backend(const BackendDescriptor& d, AgentRole role,
                                                  const World* world,
                                                  const std::vector<TaskRecord>* tasks) {
  const std::string who(to_string(role));
  if (d.kind == "oracle") {
    switch (role) {
      case AgentRole::Coordinator:
        if (!tasks) config_error("oracle coordinator needs a task suite");
        return std::make_shared<ScriptedBackend>(
            role, oracle_coordinator_table(*tasks),
            d.default_response.value_or(coordinator_response("Close the task")));
      case AgentRole::Executor:
        if (!world) config_error("oracle executor needs a world");
        return std::make_shared<ScriptedBackend>(
            role, grounding_executor_table(*world),
            d.default_response.value_or(canonical_executor_output(
                "Mark the task as complete", Action::simple(ActionType::Complete))));
      case AgentRole::StateTracker:
        if (!tasks) config_error("oracle state tracker needs a task suite");
        return std::make_shared<ScriptedBackend>(
            role, oracle_tracker_table(*tasks),
            d.default_response.value_or(tracker_response("Task in progress; details unclear")));
    }
  }
  if (d.kind == "scripted") {
    ScriptTable table;
    try {
      table = Json::parse(read_file(*d.table)).get<ScriptTable>();
    } catch (const Json::exception& e) {
      config_error(who + " script table: " + e.what());
    }
    return std::make_shared<ScriptedBackend>(role, std::move(table), d.default_response);
  }
  if (d.kind == "toy") {
    ToyPolicy policy;
    try {
      policy = Json::parse(read_file(*d.policy)).get<ToyPolicy>();
    } catch (const Json::exception& e) {
      config_error(who + " toy policy: " + e.what());
    }
    if (policy.role != role) config_error(who + " toy policy is for another role");
    return std::make_shared<ToyBackend>(std::move(policy), d.greedy, d.default_response);
  }
  if (d.kind == "remote") return std::make_shared<RemoteBackend>(role, d.remote);
  config_error(who + ": unknown backend kind '" + d.kind + "'");
}

}  // namespace ces
