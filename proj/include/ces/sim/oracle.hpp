#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ces/sim/world.hpp"

namespace ces {

struct PathStep {
  std::string screen;
  TransitionKey key;
  std::string next;
  bool operator==(const PathStep&) const = default;
};

// Breadth-first shortest path; each level is expanded in screen_id order
// and each screen's keys in key order, so ties resolve lexicographically.
// PressHome is an implicit edge from every non-home screen.
// Throws Error(Unreachable) / Error(UnknownScreen).
std::vector<PathStep> oracle_solve(const World& w, const std::string& start,
                                   const std::function<bool(const std::string&)>& goal);
std::vector<PathStep> oracle_solve(const World& w, const std::string& start,
                                   const std::string& goal_screen);

// Shortest-path distances from `start` (reachable screens only).
std::map<std::string, int> distances_from(const World& w, const std::string& start);
// Number of distinct shortest paths between two screens.
long long count_shortest_paths(const World& w, const std::string& from, const std::string& to);

// Concrete action that fires `key` on `screen`: element center for
// Click/Select, the screen's field text for TypeText.
Action action_for_key(const World& w, const std::string& screen, const TransitionKey& key);

}  // namespace ces
