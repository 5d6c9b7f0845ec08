#include "ces/sim/oracle.hpp"

#include <algorithm>
#include <set>

#include "ces/core/error.hpp"

namespace ces {

namespace {

std::vector<std::pair<TransitionKey, std::string>> edges_of(const World& w, const std::string& s) {
  auto out = w.outgoing(s);
  if (s != w.home_screen) {
    const auto home = TransitionKey::simple(KeyKind::PressHome);
    const bool explicit_home = std::any_of(out.begin(), out.end(),
                                           [&](const auto& e) { return e.first == home; });
    if (!explicit_home) out.emplace_back(home, w.home_screen);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::vector<PathStep> oracle_solve(const World& w, const std::string& start,
                                   const std::function<bool(const std::string&)>& goal) {
  w.screen(start);
  if (goal(start)) return {};
  std::map<std::string, PathStep> parent;
  std::set<std::string> seen{start};
  std::vector<std::string> level{start};
  while (!level.empty()) {
    std::sort(level.begin(), level.end());
    std::vector<std::string> next_level;
    for (const auto& s : level) {
      for (const auto& [key, target] : edges_of(w, s)) {
        if (!seen.insert(target).second) continue;
        parent[target] = PathStep{s, key, target};
        if (goal(target)) {
          std::vector<PathStep> path;
          for (std::string cur = target; cur != start; cur = parent[cur].screen) {
            path.push_back(parent[cur]);
          }
          std::reverse(path.begin(), path.end());
          return path;
        }
        next_level.push_back(target);
      }
    }
    level = std::move(next_level);
  }
  throw Error(Errc::Unreachable, "no path from '" + start + "' satisfies the goal");
}

std::vector<PathStep> oracle_solve(const World& w, const std::string& start,
                                   const std::string& goal_screen) {
  w.screen(goal_screen);
  return oracle_solve(w, start, [&](const std::string& s) { return s == goal_screen; });
}

std::map<std::string, int> distances_from(const World& w, const std::string& start) {
  std::map<std::string, int> dist{{start, 0}};
  std::vector<std::string> level{start};
  while (!level.empty()) {
    std::vector<std::string> next_level;
    for (const auto& s : level) {
      for (const auto& [key, target] : edges_of(w, s)) {
        if (dist.emplace(target, dist[s] + 1).second) next_level.push_back(target);
      }
    }
    level = std::move(next_level);
  }
  return dist;
}

long long count_shortest_paths(const World& w, const std::string& from, const std::string& to) {
  const auto dist = distances_from(w, from);
  if (!dist.count(to)) return 0;
  std::map<std::string, long long> ways{{from, 1}};
  std::vector<std::pair<int, std::string>> order;
  for (const auto& [s, d] : dist) order.emplace_back(d, s);
  std::sort(order.begin(), order.end());
  for (const auto& [d, s] : order) {
    for (const auto& [key, target] : edges_of(w, s)) {
      auto it = dist.find(target);
      if (it != dist.end() && it->second == d + 1) ways[target] += ways[s];
    }
  }
  return ways[to];
}

Action action_for_key(const World& w, const std::string& screen, const TransitionKey& key) {
  const Observation& obs = w.screen(screen);
  auto center_of = [&](const std::string& id) {
    const UiElement* el = obs.find_element(id);
    if (!el) throw Error(Errc::InvalidSpec, "unknown element '" + id + "' on " + screen);
    return el->bbox.center();
  };
  switch (key.kind) {
    case KeyKind::Click: {
      const Point c = center_of(key.element_id);
      return Action::click(c.x, c.y);
    }
    case KeyKind::Select: {
      const Point c = center_of(key.element_id);
      return Action::select(c.x, c.y);
    }
    case KeyKind::TypeText:
      return Action::type_text(w.screen_info(screen).field_text.value_or("text"));
    case KeyKind::Scroll: return Action::scroll(key.direction.value_or(Direction::Down));
    case KeyKind::PressHome: return Action::simple(ActionType::PressHome);
    case KeyKind::PressBack: return Action::simple(ActionType::PressBack);
    case KeyKind::Enter: return Action::simple(ActionType::Enter);
  }
  return Action::simple(ActionType::Complete);
}

}  // namespace ces
