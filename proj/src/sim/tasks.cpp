#include "ces/sim/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "ces/core/error.hpp"
#include "ces/core/rng.hpp"
#include "ces/sim/grounding.hpp"
#include "ces/sim/oracle.hpp"

namespace ces {

namespace {

struct Trip {
  std::string target;
  std::string app;
  std::vector<PathStep> path;
};

std::map<std::string, Trip> all_trips(const World& w) {
  std::map<std::string, Trip> trips;
  for (const auto& [id, _] : w.screens) {
    if (id == w.home_screen) continue;
    try {
      trips[id] = Trip{id, w.screen_info(id).app, oracle_solve(w, w.home_screen, id)};
    } catch (const Error&) {
      // unreachable screens are never targets
    }
  }
  return trips;
}

int sequence_length(const std::vector<const Trip*>& seq) {
  int len = static_cast<int>(seq.size());  // PressHome joins plus the final Complete
  for (const Trip* t : seq) len += static_cast<int>(t->path.size());
  return len;
}

// All target sequences of exactly k trips with no two consecutive trips in
// the same app, in lexicographic order.
void enumerate(const std::vector<const Trip*>& trips, int k, std::vector<const Trip*>& cur,
               std::vector<std::vector<const Trip*>>& out) {
  if (static_cast<int>(cur.size()) == k) {
    out.push_back(cur);
    return;
  }
  for (const Trip* t : trips) {
    if (!cur.empty() && cur.back()->app == t->app) continue;
    cur.push_back(t);
    enumerate(trips, k, cur, out);
    cur.pop_back();
  }
}

std::string task_instruction(const World& w, const std::vector<const Trip*>& seq) {
  std::ostringstream os;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    os << (i == 0 ? "Open the " : ", then open the ") << w.screen_info(seq[i]->target).title
       << " screen";
  }
  os << '.';
  return os.str();
}

std::string element_label(const World& w, const std::string& screen, const TransitionKey& key) {
  if (key.element_id.empty()) return {};
  const UiElement* el = w.screen(screen).find_element(key.element_id);
  return el ? el->label : std::string{};
}

GroundTruthStep gt_for(const World& w, const std::string& screen, const TransitionKey& key,
                       const Action& a) {
  GroundTruthStep gt;
  gt.gt_type = a.kind;
  if (is_point_bearing(a.kind)) gt.gt_bbox = w.screen(screen).find_element(key.element_id)->bbox;
  if (a.kind == ActionType::TypeText) gt.gt_text = a.input_text;
  if (a.kind == ActionType::Scroll) gt.gt_direction = a.direction;
  gt.gt_instruction = instruction_for(a, element_label(w, screen, key));
  return gt;
}

TaskRecord build_task(const World& w, const std::vector<const Trip*>& seq, int index,
                      bool confuser, const TaskSuiteParams& params) {
  TaskRecord task;
  std::ostringstream id;
  id << "task-" << (index < 100 ? (index < 10 ? "00" : "0") : "") << index;
  task.task_id = id.str();
  task.instruction = task_instruction(w, seq);

  const int total = static_cast<int>(seq.size());
  struct Pending {
    std::string screen;
    TransitionKey key;
    Action action;
    int trip = 0;
    bool reaches_target = false;
  };
  std::vector<Pending> plan;
  for (int i = 0; i < total; ++i) {
    const Trip& trip = *seq[i];
    for (std::size_t s = 0; s < trip.path.size(); ++s) {
      const auto& ps = trip.path[s];
      plan.push_back({ps.screen, ps.key, action_for_key(w, ps.screen, ps.key), i,
                      s + 1 == trip.path.size()});
    }
    if (i + 1 < total) {
      const auto key = TransitionKey::simple(KeyKind::PressHome);
      plan.push_back({trip.target, key, Action::simple(ActionType::PressHome), i, false});
    }
  }
  plan.push_back({seq.back()->target, TransitionKey::simple(KeyKind::PressHome),
                  Action::simple(ActionType::Complete), total - 1, false});

  int completed = 0;
  std::string state(kInitialStateText);
  for (const auto& p : plan) {
    TaskStep step;
    step.observation = w.screen(p.screen);
    if (p.action.kind == ActionType::Complete) {
      step.gt.gt_type = ActionType::Complete;
      step.gt.gt_instruction = instruction_for(p.action);
    } else {
      step.gt = gt_for(w, p.screen, p.key, p.action);
    }
    step.gt.gt_state = state;
    task.steps.push_back(std::move(step));
    if (p.reaches_target) ++completed;
    state = progress_state(seq[p.trip]->app, completed, total,
                           verb_for(p.action, element_label(w, p.screen, p.key)));
  }
  task.metadata["final_state"] = state;
  task.metadata["subgoals"] = std::to_string(total);
  task.metadata["confuser"] = confuser ? "true" : "false";
  task.metadata["world_seed"] = std::to_string(w.seed);
  task.metadata["suite_seed"] = std::to_string(params.seed);
  return task;
}

}  // namespace

std::string progress_state(std::string_view app, int completed, int total,
                           std::string_view last_verb) {
  std::ostringstream os;
  os << "Opened " << app << "; completed " << completed << " of " << total
     << " subgoals; last action " << last_verb;
  return os.str();
}

std::string final_state_text(const TaskRecord& task) {
  auto it = task.metadata.find("final_state");
  return it == task.metadata.end() ? std::string("Task finished.") : it->second;
}

int max_task_length(const World& w, int max_subgoals) {
  const auto trips = all_trips(w);
  // best[app] = longest sequence so far ending in that app.
  std::map<std::string, int> best;
  int overall = 0;
  for (int k = 1; k <= max_subgoals; ++k) {
    std::map<std::string, int> next;
    for (const auto& [_, t] : trips) {
      int prev = 0;
      if (k > 1) {
        prev = -1;
        for (const auto& [app, len] : best) {
          if (app != t.app) prev = std::max(prev, len);
        }
        if (prev < 0) continue;
      }
      // Each trip adds its path plus one joining/closing step.
      const int len = prev + static_cast<int>(t.path.size()) + 1;
      next[t.app] = std::max(next[t.app], len);
      overall = std::max(overall, len);
    }
    best = std::move(next);
  }
  return overall;
}

std::vector<TaskRecord> generate_task_suite(const World& w, const TaskSuiteParams& params) {
  if (params.min_len < 2) throw Error(Errc::InvalidArgument, "min_len must be >= 2");
  if (params.n_tasks < 0) throw Error(Errc::InvalidArgument, "n_tasks must be >= 0");
  if (params.max_subgoals < 1) throw Error(Errc::InvalidArgument, "max_subgoals must be >= 1");
  if (params.confuser_rate < 0.0 || params.confuser_rate > 1.0) {
    throw Error(Errc::InvalidArgument, "confuser_rate must lie in [0, 1]");
  }
  const int longest = max_task_length(w, params.max_subgoals);
  if (params.min_len > longest) {
    throw Error(Errc::Unsatisfiable, "min_len " + std::to_string(params.min_len) +
                                         " exceeds the longest possible task (" +
                                         std::to_string(longest) + " steps)");
  }

  const auto trip_map = all_trips(w);
  std::vector<const Trip*> trips;
  for (const auto& [_, t] : trip_map) trips.push_back(&t);

  // Candidate sequences split into single-trip and multi-trip pools.
  std::vector<std::vector<const Trip*>> single, multi;
  for (int k = 1; k <= params.max_subgoals; ++k) {
    std::vector<std::vector<const Trip*>> all;
    std::vector<const Trip*> cur;
    enumerate(trips, k, cur, all);
    for (auto& seq : all) {
      if (sequence_length(seq) < params.min_len) continue;
      (k == 1 ? single : multi).push_back(std::move(seq));
    }
  }

  Rng rng(derive_seed(params.seed, w.seed));
  const int n_confusers =
      static_cast<int>(std::ceil(params.confuser_rate * params.n_tasks - 1e-9));
  std::vector<int> order(params.n_tasks);
  for (int i = 0; i < params.n_tasks; ++i) order[i] = i;
  rng.shuffle(order);
  std::set<int> confusers(order.begin(), order.begin() + n_confusers);

  std::set<std::string> used;
  auto draw = [&](std::vector<std::vector<const Trip*>>& pool) -> const std::vector<const Trip*>* {
    std::vector<std::size_t> free;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (!used.count(task_instruction(w, pool[i]))) free.push_back(i);
    }
    if (free.empty()) return nullptr;
    return &pool[free[rng.below(free.size())]];
  };

  std::vector<TaskRecord> suite;
  for (int i = 0; i < params.n_tasks; ++i) {
    const bool confuser = confusers.count(i) > 0;
    const std::vector<const Trip*>* seq = nullptr;
    if (!confuser) seq = draw(single);
    if (!seq) seq = draw(multi);
    if (!seq) {
      throw Error(Errc::Unsatisfiable, "not enough distinct tasks of length >= " +
                                           std::to_string(params.min_len));
    }
    used.insert(task_instruction(w, *seq));
    suite.push_back(build_task(w, *seq, i, confuser, params));
  }
  return suite;
}

bool has_nonadjacent_repeat(const TaskRecord& task) {
  std::map<std::string, std::size_t> last_seen;
  for (std::size_t t = 0; t < task.steps.size(); ++t) {
    const auto& id = task.steps[t].observation.screen_id;
    auto it = last_seen.find(id);
    if (it != last_seen.end() && t - it->second >= 2) return true;
    if (it == last_seen.end()) last_seen[id] = t;
  }
  return false;
}

std::vector<std::string> replay_violations(const World& w, const TaskRecord& task) {
  std::vector<std::string> out;
  for (std::size_t t = 0; t < task.steps.size(); ++t) {
    const auto& step = task.steps[t];
    const auto result = apply_action(w, step.observation.screen_id, step.gt.canonical_action());
    const bool last = t + 1 == task.steps.size();
    if (last) {
      if (!result.ended) out.push_back("step " + std::to_string(t) + ": final action does not end");
    } else if (result.ended || result.next_screen != task.steps[t + 1].observation.screen_id) {
      out.push_back("step " + std::to_string(t) + ": lands on " + result.next_screen +
                    " instead of " + task.steps[t + 1].observation.screen_id);
    }
  }
  return out;
}

}  // namespace ces
