#include "ces/sim/scripts.hpp"

#include <algorithm>
#include <set>

#include "ces/agent_io/action_codec.hpp"
#include "ces/agent_io/tagged.hpp"
#include "ces/core/context_keys.hpp"
#include "ces/core/error.hpp"
#include "ces/core/rng.hpp"
#include "ces/core/text.hpp"
#include "ces/sim/grounding.hpp"

namespace ces {

namespace {

constexpr std::string_view kCoordinatorThink = "Pick the next step toward the task.";
constexpr std::string_view kTrackerThink = "Fold the latest executor output into the task state.";

const std::vector<std::string>& generic_instructions() {
  static const std::vector<std::string> list = {
      "Go back",       "Press enter",          "Go to the home screen", "Mark the task as complete",
      "Close the task", "Scroll up",           "Scroll down",           "Scroll left",
      "Scroll right"};
  return list;
}

std::optional<std::string> field_label(const World& w, const std::string& screen) {
  for (const auto& [key, _] : w.outgoing(screen)) {
    if (key.kind == KeyKind::TypeText) {
      if (const UiElement* el = w.screen(screen).find_element(key.element_id)) return el->label;
    }
  }
  return std::nullopt;
}

void append_unique(std::vector<std::string>& out, std::set<std::string>& seen,
                   const std::vector<std::string>& items) {
  for (const auto& s : items) {
    if (seen.insert(s).second) out.push_back(s);
  }
}

std::vector<std::string> coordinator_distractors(const Observation& obs,
                                                 const GroundTruthStep& gt, int want, Rng& rng) {
  std::vector<std::string> same;
  const Action gt_action = gt.canonical_action();
  if (is_point_bearing(gt.gt_type)) {
    for (const auto& el : obs.elements) {
      Action a = gt_action;
      same.push_back(instruction_for(a, el.label));
    }
  } else if (gt.gt_type == ActionType::TypeText) {
    std::string field = "Search box";
    if (gt.gt_instruction) {
      const auto pos = gt.gt_instruction->rfind(" into '");
      if (pos != std::string::npos) {
        field = gt.gt_instruction->substr(pos + 7);
        if (!field.empty()) field.pop_back();
      }
    }
    for (const auto& t : wrong_type_texts()) {
      same.push_back(instruction_for(Action::type_text(t), field));
    }
  } else if (gt.gt_type == ActionType::Scroll) {
    for (Direction d : kAllDirections) same.push_back(instruction_for(Action::scroll(d)));
  }
  std::vector<std::string> generic;
  for (const auto& el : obs.elements) {
    generic.push_back(instruction_for(Action::click(0, 0), el.label));
  }
  for (const auto& g : generic_instructions()) generic.push_back(g);
  rng.shuffle(same);
  rng.shuffle(generic);

  std::vector<std::string> out;
  std::set<std::string> seen{gt.gt_instruction.value_or("")};
  append_unique(out, seen, same);
  append_unique(out, seen, generic);
  if (static_cast<int>(out.size()) < want) {
    throw Error(Errc::InvalidArgument, "not enough distinct distractor instructions");
  }
  out.resize(want);
  return out;
}

}  // namespace

std::string coordinator_response(std::string_view instruction) {
  return wrap_tagged(kCoordinatorThink, instruction);
}

std::string tracker_response(std::string_view state) { return wrap_tagged(kTrackerThink, state); }

std::string gt_executor_output(const TaskStep& step) {
  const std::string instr =
      step.gt.gt_instruction.value_or(instruction_for(step.gt.canonical_action()));
  return canonical_executor_output(instr, step.gt.canonical_action());
}

const std::vector<std::string>& wrong_type_texts() {
  static const std::vector<std::string> texts = {"hello world",  "open settings", "cancel order",
                                                 "random words", "lorem ipsum",   "good morning",
                                                 "set alarm"};
  return texts;
}

ScriptTable oracle_coordinator_table(const std::vector<TaskRecord>& tasks,
                                     bool first_visit_fallback) {
  ScriptTable table;
  for (const auto& task : tasks) {
    for (const auto& step : task.steps) {
      if (!step.gt.gt_state || !step.gt.gt_instruction) {
        throw Error(Errc::MissingGtFields, task.task_id + ": step lacks gt_state/gt_instruction");
      }
      const auto& screen = step.observation.screen_id;
      const auto response = coordinator_response(*step.gt.gt_instruction);
      table[coordinator_key(task.instruction, screen, *step.gt.gt_state)] = response;
      if (first_visit_fallback) {
        table.emplace(coordinator_key(task.instruction, screen, kWildcard), response);
      }
    }
  }
  return table;
}

ScriptTable oracle_tracker_table(const std::vector<TaskRecord>& tasks) {
  ScriptTable table;
  for (const auto& task : tasks) {
    for (std::size_t t = 0; t < task.steps.size(); ++t) {
      const auto& step = task.steps[t];
      if (!step.gt.gt_state) throw Error(Errc::MissingGtState, task.task_id + ": step lacks gt_state");
      const std::string next = t + 1 < task.steps.size()
                                   ? task.steps[t + 1].gt.gt_state.value_or("")
                                   : final_state_text(task);
      table[tracker_key(task.instruction, *step.gt.gt_state, gt_executor_output(step))] =
          tracker_response(next);
    }
  }
  return table;
}

std::vector<std::string> instruction_vocabulary(const World& w, const Observation& obs) {
  std::vector<std::string> vocab;
  for (const auto& el : obs.elements) {
    vocab.push_back(instruction_for(Action::click(0, 0), el.label));
    vocab.push_back(instruction_for(Action::select(0, 0), el.label));
    vocab.push_back(instruction_for(Action::long_press(0, 0), el.label));
  }
  if (auto field = field_label(w, obs.screen_id)) {
    std::vector<std::string> texts = wrong_type_texts();
    if (auto ft = w.screen_info(obs.screen_id).field_text) texts.push_back(*ft);
    for (const auto& t : texts) vocab.push_back(instruction_for(Action::type_text(t), *field));
  }
  for (const auto& g : generic_instructions()) vocab.push_back(g);
  return vocab;
}

ScriptTable grounding_executor_table(const World& w) {
  ScriptTable table;
  for (const auto& [id, obs] : w.screens) {
    for (const auto& instr : instruction_vocabulary(w, obs)) {
      auto action = ground_instruction(instr, obs);
      if (!action) continue;
      table[executor_key(instr, id)] = canonical_executor_output(instr, *action);
    }
  }
  return table;
}

ToyPolicy build_toy_coordinator(const World& w, const std::vector<TaskRecord>& tasks, int k,
                                std::uint64_t seed) {
  (void)w;
  if (k < 1) throw Error(Errc::InvalidArgument, "k must be >= 1");
  ToyPolicy policy;
  policy.role = AgentRole::Coordinator;
  for (const auto& task : tasks) {
    for (const auto& step : task.steps) {
      if (!step.gt.gt_state || !step.gt.gt_instruction) {
        throw Error(Errc::MissingGtFields, task.task_id + ": step lacks gt_state/gt_instruction");
      }
      const auto key =
          coordinator_key(task.instruction, step.observation.screen_id, *step.gt.gt_state);
      Rng rng(text::fnv1a(key) ^ seed);
      std::vector<std::string> instrs{*step.gt.gt_instruction};
      for (auto& d : coordinator_distractors(step.observation, step.gt, k - 1, rng)) {
        instrs.push_back(std::move(d));
      }
      rng.shuffle(instrs);
      ToyContext ctx;
      for (const auto& i : instrs) ctx.payloads.push_back(coordinator_response(i));
      ctx.logits.assign(ctx.payloads.size(), 0.0);
      policy.contexts[key] = std::move(ctx);
    }
  }
  return policy;
}

ToyPolicy build_toy_tracker(const std::vector<TaskRecord>& tasks, int k, std::uint64_t seed) {
  if (k < 2) throw Error(Errc::InvalidArgument, "k must be >= 2");
  ToyPolicy policy;
  policy.role = AgentRole::StateTracker;
  for (const auto& task : tasks) {
    for (std::size_t t = 1; t < task.steps.size(); ++t) {
      const auto& prev = task.steps[t - 1];
      const auto& cur = task.steps[t];
      if (!prev.gt.gt_state || !cur.gt.gt_state) {
        throw Error(Errc::MissingGtState, task.task_id + ": step lacks gt_state");
      }
      const auto key = tracker_key(task.instruction, *prev.gt.gt_state, gt_executor_output(prev));
      const std::string& truth = *cur.gt.gt_state;

      std::vector<std::string> payloads{tracker_response(truth), truth};
      std::set<std::string> seen(payloads.begin(), payloads.end());
      // Stale or premature states from the same task, nearest steps first.
      for (std::size_t d = 1; d < task.steps.size() && static_cast<int>(payloads.size()) < k;
           ++d) {
        for (long long s : {static_cast<long long>(t) - static_cast<long long>(d),
                            static_cast<long long>(t + d)}) {
          if (s < 0 || s >= static_cast<long long>(task.steps.size())) continue;
          const auto& other = task.steps[s].gt.gt_state;
          if (!other || *other == truth) continue;
          if (static_cast<int>(payloads.size()) >= k) break;
          if (seen.insert(tracker_response(*other)).second) {
            payloads.push_back(tracker_response(*other));
          }
        }
      }
      for (int n = 1; static_cast<int>(payloads.size()) < k; ++n) {
        auto filler = tracker_response("Task in progress; details unclear (" +
                                       std::to_string(n) + ")");
        if (seen.insert(filler).second) payloads.push_back(filler);
      }
      Rng rng(text::fnv1a(key) ^ seed);
      rng.shuffle(payloads);
      ToyContext ctx;
      ctx.payloads = std::move(payloads);
      ctx.logits.assign(ctx.payloads.size(), 0.0);
      policy.contexts[key] = std::move(ctx);
    }
  }
  return policy;
}

Fixture standard_fixture() {
  Fixture fx;
  fx.world = generate_world(7, WorldParams{});
  TaskSuiteParams params;
  params.n_tasks = 20;
  params.min_len = 8;
  params.confuser_rate = 0.5;
  params.seed = 3;
  fx.tasks = generate_task_suite(fx.world, params);
  return fx;
}

Fixture probe_fixture() {
  Fixture fx;
  WorldParams world;
  world.screens = 30;
  fx.world = generate_world(11, world);
  TaskSuiteParams params;
  params.n_tasks = 40;
  params.min_len = 14;
  params.confuser_rate = 1.0;
  params.seed = 5;
  fx.tasks = generate_task_suite(fx.world, params);
  return fx;
}

}  // namespace ces
