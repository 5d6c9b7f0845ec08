#include "ces/eval/ingest.hpp"

#include <algorithm>

#include "ces/agent_io/action_codec.hpp"
#include "ces/core/error.hpp"
#include "ces/core/log.hpp"
#include "ces/core/validate.hpp"

namespace ces {

namespace {

const std::vector<std::string> kTaskKeys = {"task_id", "instruction", "steps"};

struct FieldRef {
  std::string name;
  bool optional = false;
};

FieldRef field(const SchemaDescriptor& s, const std::string& key) {
  const auto it = s.fields.find(key);
  if (it == s.fields.end()) return {key, true};
  std::string name = it->second;
  const bool optional = !name.empty() && name.back() == '?';
  if (optional) name.pop_back();
  return {name, optional};
}

bool is_task_key(const std::string& key) {
  return std::find(kTaskKeys.begin(), kTaskKeys.end(), key) != kTaskKeys.end();
}

const Json* lookup(const Json& obj, const FieldRef& f) {
  if (!obj.is_object()) return nullptr;
  const auto it = obj.find(f.name);
  if (it == obj.end() || it->is_null()) return nullptr;
  return &*it;
}

const Json& require(const Json& obj, const FieldRef& f) {
  const Json* v = lookup(obj, f);
  if (!v) throw Error(Errc::MalformedRecord, "missing field '" + f.name + "'");
  return *v;
}

BBox to_bbox(const Json& v) {
  if (v.is_array() && v.size() == 4) {
    return {v[0].get<int>(), v[1].get<int>(), v[2].get<int>(), v[3].get<int>()};
  }
  return v.get<BBox>();
}

TaskStep convert_step(const Json& s, const SchemaDescriptor& schema, const std::string& task_id,
                      std::size_t index) {
  TaskStep step;
  const auto name = require(s, field(schema, "action")).get<std::string>();
  const auto kind = parse_action_name(name);
  if (!kind) throw Error(Errc::UnknownAction, "unknown action '" + name + "'");
  step.gt.gt_type = *kind;
  if (const Json* v = lookup(s, field(schema, "bbox"))) step.gt.gt_bbox = to_bbox(*v);
  if (const Json* v = lookup(s, field(schema, "text"))) step.gt.gt_text = v->get<std::string>();
  if (const Json* v = lookup(s, field(schema, "direction"))) {
    const auto d = direction_from_string(v->get<std::string>());
    if (!d) throw Error(Errc::MalformedRecord, "bad direction " + v->dump());
    step.gt.gt_direction = d;
  }
  if (*kind == ActionType::Scroll && !step.gt.gt_direction && step.gt.gt_text) {
    step.gt.gt_direction = direction_from_string(*step.gt.gt_text);
  }
  if (const Json* v = lookup(s, field(schema, "gt_state"))) step.gt.gt_state = v->get<std::string>();
  if (const Json* v = lookup(s, field(schema, "gt_instruction"))) {
    step.gt.gt_instruction = v->get<std::string>();
  }
  auto& obs = step.observation;
  if (const Json* v = lookup(s, field(schema, "image"))) obs.image_ref = v->get<std::string>();
  obs.screen_id = obs.image_ref.value_or(task_id + "#" + std::to_string(index));
  if (const Json* v = lookup(s, field(schema, "screen_width"))) obs.width = v->get<int>();
  if (const Json* v = lookup(s, field(schema, "screen_height"))) obs.height = v->get<int>();
  return step;
}

TaskRecord convert(const Json& rec, const SchemaDescriptor& schema, std::size_t line) {
  TaskRecord task;
  if (const Json* v = lookup(rec, field(schema, "task_id"))) {
    task.task_id = v->is_string() ? v->get<std::string>() : v->dump();
  } else {
    task.task_id = "line-" + std::to_string(line);
  }
  task.instruction = require(rec, field(schema, "instruction")).get<std::string>();
  const Json& steps = require(rec, field(schema, "steps"));
  if (!steps.is_array()) throw Error(Errc::MalformedRecord, "steps is not an array");
  for (std::size_t i = 0; i < steps.size(); ++i) {
    task.steps.push_back(convert_step(steps[i], schema, task.task_id, i));
  }
  if (!schema.terminating) task.metadata["terminating"] = "false";
  return task;
}

void check_first_record(const Json& rec, const SchemaDescriptor& schema) {
  const Json* steps = lookup(rec, field(schema, "steps"));
  const Json* first_step = steps && steps->is_array() && !steps->empty() ? &(*steps)[0] : nullptr;
  for (const auto& [key, _] : schema.fields) {
    const FieldRef f = field(schema, key);
    if (f.optional) continue;
    const Json* where = is_task_key(key) ? &rec : first_step;
    if (!where || !lookup(*where, f)) {
      throw Error(Errc::UnknownSchemaField,
                  "descriptor maps " + key + " to '" + f.name + "', absent from the first record");
    }
  }
}

}  // namespace

const std::vector<std::string>& schema_canonical_keys() {
  static const std::vector<std::string> keys = {
      "task_id",  "instruction",    "steps", "action",       "bbox",          "text",
      "direction", "gt_state", "gt_instruction", "image", "screen_width", "screen_height"};
  return keys;
}

SchemaDescriptor SchemaDescriptor::canonical() {
  SchemaDescriptor s;
  for (const auto& key : schema_canonical_keys()) s.fields[key] = key + "?";
  s.fields["instruction"] = "instruction";
  s.fields["steps"] = "steps";
  s.fields["action"] = "action";
  return s;
}

SchemaDescriptor SchemaDescriptor::from_json(const Json& j) {
  SchemaDescriptor s = canonical();
  if (!j.is_object()) throw Error(Errc::UnknownSchemaField, "descriptor must be an object");
  for (const auto& [key, value] : j.items()) {
    if (key == "terminating") {
      s.terminating = value.get<bool>();
    } else if (key == "fields") {
      const auto& keys = schema_canonical_keys();
      for (const auto& [canon, source] : value.items()) {
        if (std::find(keys.begin(), keys.end(), canon) == keys.end()) {
          throw Error(Errc::UnknownSchemaField, "unknown canonical field '" + canon + "'");
        }
        s.fields[canon] = source.get<std::string>();
      }
    } else {
      throw Error(Errc::UnknownSchemaField, "unknown descriptor key '" + key + "'");
    }
  }
  return s;
}

IngestResult ingest_benchmark(const std::filesystem::path& path, const SchemaDescriptor& schema) {
  const std::string content = read_file(path);
  IngestResult out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  bool first = true;
  while (start <= content.size()) {
    std::size_t end = content.find('\n', start);
    if (end == std::string::npos) end = content.size();
    const std::string line = content.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto skip = [&](const std::string& why) {
      ++out.skipped;
      out.skip_reasons.push_back("line " + std::to_string(line_no) + ": " + why);
      log::warn(path.string() + ":" + out.skip_reasons.back());
    };
    Json rec;
    try {
      rec = Json::parse(line);
    } catch (const Json::exception& e) {
      skip(std::string("invalid JSON: ") + e.what());
      continue;
    }
    if (first) {
      check_first_record(rec, schema);
      first = false;
    }
    try {
      TaskRecord task = convert(rec, schema, line_no);
      const auto problems = validate_task(task);
      if (!problems.empty()) {
        skip(problems.front());
        continue;
      }
      out.tasks.push_back(std::move(task));
    } catch (const Error& e) {
      skip(e.what());
    } catch (const Json::exception& e) {
      skip(e.what());
    }
  }
  return out;
}

}  // namespace ces
