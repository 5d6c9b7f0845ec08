#include "ces/sim/world.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "ces/core/error.hpp"
#include "ces/core/rng.hpp"
#include "ces/core/text.hpp"
#include "ces/core/validate.hpp"

namespace ces {

namespace {

constexpr const char* kAppPool[] = {"Zoom", "Calendar", "Mail", "Notes",
                                    "Maps", "Music",    "Photos", "Files"};

constexpr const char* kNounPool[] = {
    "Meetings",   "Contacts",  "Settings", "Profile",   "Inbox",     "Drafts",     "Archive",
    "Schedule",   "Reminders", "Playlists", "Albums",   "Downloads", "Favorites",  "Recent",
    "Accounts",   "Privacy",   "Alerts",   "Storage",   "Display",   "Sounds",     "Library",
    "Shared",     "Trash",     "Labels",   "Folders",   "Events",    "Invites",    "Tasks",
    "Routes",     "Places",    "Offline",  "Artists",   "Podcasts",  "Camera",     "Memories",
    "Backups",    "Devices",   "Security", "Billing",   "Help",      "About",      "Feedback",
    "Themes",     "Widgets",   "Sync",     "Exports",   "Imports",   "Templates",  "Tags",
    "History",    "Bookmarks", "Chats",    "Groups",    "Channels",  "Recordings", "Whiteboard",
    "Polls",      "Webinars",  "Contacts Sync", "Members", "Queue",  "Lyrics",     "Journeys",
    "Timeline",   "Projects",  "Reports",  "Receipts",  "Travel",    "Workouts",   "Wallet",
};

constexpr const char* kDecoyPool[] = {"Share", "Edit",   "More options", "Info",  "Refresh",
                                      "Filter", "Sort",  "Menu",         "Add",   "Delete",
                                      "Copy",  "Star",   "Pin",          "Mute",  "Print",
                                      "Rename", "Move",  "Details",      "Close panel", "Undo"};

constexpr const char* kFieldTexts[] = {"meeting notes", "quarterly report", "team lunch",
                                       "flight to paris", "weekly sync",    "project plan",
                                       "budget review",   "dentist visit"};

constexpr const char* kFieldLabel = "Search box";

std::string screen_id(int i) {
  std::ostringstream os;
  os << 's' << (i < 10 ? "0" : "") << i;
  return os.str();
}

[[noreturn]] void invalid(const std::string& what) { throw Error(Errc::InvalidSpec, what); }

KeyKind key_kind_from(std::string_view s) {
  if (s == "click") return KeyKind::Click;
  if (s == "type") return KeyKind::TypeText;
  if (s == "scroll") return KeyKind::Scroll;
  if (s == "press_home") return KeyKind::PressHome;
  if (s == "press_back") return KeyKind::PressBack;
  if (s == "enter") return KeyKind::Enter;
  if (s == "select") return KeyKind::Select;
  throw Error(Errc::MalformedRecord, "unknown transition key kind '" + std::string(s) + "'");
}

std::string_view key_kind_name(KeyKind k) {
  switch (k) {
    case KeyKind::Click: return "click";
    case KeyKind::TypeText: return "type";
    case KeyKind::Scroll: return "scroll";
    case KeyKind::PressHome: return "press_home";
    case KeyKind::PressBack: return "press_back";
    case KeyKind::Enter: return "enter";
    case KeyKind::Select: return "select";
  }
  return "click";
}

bool key_has_element(KeyKind k) {
  return k == KeyKind::Click || k == KeyKind::Select || k == KeyKind::TypeText;
}

// Edge under construction during generation.
struct Edge {
  int from = 0;
  int to = 0;
  KeyKind kind = KeyKind::Click;
  std::optional<Direction> direction;
};

}  // namespace

std::string to_string(const TransitionKey& key) {
  std::string out(key_kind_name(key.kind));
  if (key_has_element(key.kind)) out += ":" + key.element_id;
  if (key.kind == KeyKind::Scroll && key.direction) {
    out += ":" + std::string(to_string(*key.direction));
  }
  return out;
}

TransitionKey transition_key_from_string(std::string_view s) {
  const auto colon = s.find(':');
  const auto head = s.substr(0, colon);
  TransitionKey key = TransitionKey::simple(key_kind_from(head));
  const std::string tail = colon == std::string_view::npos ? "" : std::string(s.substr(colon + 1));
  if (key_has_element(key.kind)) {
    if (tail.empty()) throw Error(Errc::MalformedRecord, "transition key needs element id");
    key.element_id = tail;
  } else if (key.kind == KeyKind::Scroll) {
    auto d = direction_from_string(tail);
    if (!d) throw Error(Errc::MalformedRecord, "scroll key needs a direction");
    key.direction = d;
  } else if (!tail.empty()) {
    throw Error(Errc::MalformedRecord, "unexpected argument in transition key");
  }
  return key;
}

const Observation& World::screen(const std::string& id) const {
  auto it = screens.find(id);
  if (it == screens.end()) throw Error(Errc::UnknownScreen, "unknown screen '" + id + "'");
  return it->second;
}

const ScreenInfo& World::screen_info(const std::string& id) const {
  auto it = info.find(id);
  if (it == info.end()) throw Error(Errc::UnknownScreen, "unknown screen '" + id + "'");
  return it->second;
}

std::vector<std::pair<TransitionKey, std::string>> World::outgoing(const std::string& id) const {
  std::vector<std::pair<TransitionKey, std::string>> out;
  auto it = transitions.lower_bound({id, TransitionKey::simple(KeyKind::Click)});
  for (; it != transitions.end() && it->first.first == id; ++it) {
    out.emplace_back(it->first.second, it->second);
  }
  return out;
}

void to_json(Json& j, const World& w) {
  Json screens = Json::array();
  for (const auto& [id, obs] : w.screens) {
    Json s = obs;
    const auto& inf = w.screen_info(id);
    s["app"] = inf.app;
    s["title"] = inf.title;
    s["depth"] = inf.depth;
    if (inf.field_text) s["field_text"] = *inf.field_text;
    screens.push_back(std::move(s));
  }
  Json transitions = Json::array();
  for (const auto& [from_key, to] : w.transitions) {
    transitions.push_back(
        Json{{"from", from_key.first}, {"key", to_string(from_key.second)}, {"to", to}});
  }
  j = Json{{"seed", w.seed},
           {"home_screen", w.home_screen},
           {"screens", std::move(screens)},
           {"transitions", std::move(transitions)}};
}

void from_json(const Json& j, World& w) {
  w = World{};
  w.seed = j.value("seed", std::uint64_t{0});
  w.home_screen = j.at("home_screen").get<std::string>();
  for (const auto& s : j.at("screens")) {
    Observation obs = s.get<Observation>();
    ScreenInfo inf;
    inf.app = s.value("app", std::string{});
    inf.title = s.value("title", obs.screen_id);
    inf.depth = s.value("depth", 0);
    if (s.contains("field_text")) inf.field_text = s["field_text"].get<std::string>();
    const std::string id = obs.screen_id;
    if (!w.screens.emplace(id, std::move(obs)).second) {
      throw Error(Errc::MalformedRecord, "duplicate screen '" + id + "'");
    }
    w.info.emplace(id, std::move(inf));
  }
  for (const auto& t : j.at("transitions")) {
    auto key = transition_key_from_string(t.at("key").get<std::string>());
    auto from = t.at("from").get<std::string>();
    if (!w.transitions.emplace(std::make_pair(from, key), t.at("to").get<std::string>()).second) {
      throw Error(Errc::MalformedRecord, "duplicate transition from '" + from + "'");
    }
  }
}

std::vector<std::string> world_violations(const World& w) {
  std::vector<std::string> out;
  if (!w.screens.count(w.home_screen)) out.push_back("home screen '" + w.home_screen + "' missing");
  for (const auto& [id, obs] : w.screens) {
    if (obs.screen_id != id) out.push_back("screen key '" + id + "' does not match screen_id");
    for (const auto& v : validate_observation(obs)) out.push_back(v);
  }
  for (const auto& [from_key, to] : w.transitions) {
    const auto& [from, key] = from_key;
    const std::string where = "transition " + from + " " + to_string(key);
    if (!w.screens.count(from)) {
      out.push_back(where + ": unknown source");
      continue;
    }
    if (!w.screens.count(to)) out.push_back(where + ": dangling target '" + to + "'");
    if (key_has_element(key.kind) && !w.screens.at(from).find_element(key.element_id)) {
      out.push_back(where + ": unknown element");
    }
    if (key.kind == KeyKind::PressHome && to != w.home_screen) {
      out.push_back(where + ": press_home must reach home");
    }
    if (key.kind == KeyKind::PressBack) {
      bool forward = false;
      for (const auto& [k, target] : w.outgoing(to)) {
        if (target == from && k.kind != KeyKind::PressBack && k.kind != KeyKind::PressHome) {
          forward = true;
        }
      }
      if (!forward) out.push_back(where + ": no forward edge from '" + to + "'");
    }
  }
  return out;
}

World build_world(const Json& spec) {
  World w;
  try {
    w = spec.get<World>();
  } catch (const Error& e) {
    invalid(std::string("world spec: ") + e.what());
  } catch (const Json::exception& e) {
    invalid(std::string("world spec: ") + e.what());
  }
  for (const auto& [id, _] : w.screens) {
    if (!w.info.count(id)) w.info[id] = ScreenInfo{"", id, 0, {}};
  }
  const auto violations = world_violations(w);
  if (!violations.empty()) invalid("world spec: " + text::join(violations, "; "));
  return w;
}

World generate_world(std::uint64_t seed, const WorldParams& p) {
  if (p.screens < 6 || p.screens > 99) invalid("screens must lie in [6, 99]");
  if (p.branching < 2) invalid("branching must be >= 2");
  if (p.elements_per_screen < 4 || p.elements_per_screen > 8 + p.height / 400) {
    invalid("elements_per_screen out of range");
  }
  Rng rng(seed);
  const int n = p.screens;
  const int apps = std::clamp((n - 1) / 4, 2, 6);

  std::vector<std::string> app_names(std::begin(kAppPool), std::end(kAppPool));
  std::vector<std::string> nouns(std::begin(kNounPool), std::end(kNounPool));
  rng.shuffle(app_names);
  rng.shuffle(nouns);
  if (static_cast<std::size_t>(n) > nouns.size()) invalid("too many screens for label pool");

  std::vector<int> app_of(n, -1);
  std::vector<std::string> noun_of(n);
  std::vector<int> children(n, 0);
  std::vector<Edge> edges;

  for (int a = 0; a < apps; ++a) {
    const int root = 1 + a;
    app_of[root] = a;
    noun_of[root] = app_names[a];
    edges.push_back({0, root, KeyKind::Click, {}});
  }
  std::size_t next_noun = 0;
  int next_screen = apps + 1;
  auto new_screen = [&](int app) {
    const int id = next_screen++;
    app_of[id] = app;
    noun_of[id] = nouns[next_noun++];
    return id;
  };
  // Diamond in the first app: two shortest routes into the same screen.
  {
    const int root = 1;
    const int left = new_screen(0);
    const int right = new_screen(0);
    const int join = new_screen(0);
    edges.push_back({root, left, KeyKind::Click, {}});
    edges.push_back({root, right, KeyKind::Click, {}});
    edges.push_back({left, join, KeyKind::Click, {}});
    edges.push_back({right, join, KeyKind::Click, {}});
    children[root] += 2;
    children[left] += 1;
    children[right] += 1;
  }
  std::vector<bool> has_type(n, false), has_enter(n, false);
  std::vector<std::set<Direction>> scroll_dirs(n);
  while (next_screen < n) {
    std::vector<int> parents;
    for (int s = 1; s < next_screen; ++s) {
      if (children[s] < p.branching) parents.push_back(s);
    }
    if (parents.empty()) invalid("branching too small for screen count");
    const int parent = parents[rng.below(parents.size())];
    const int child = new_screen(app_of[parent]);
    ++children[parent];
    Edge e{parent, child, KeyKind::Click, {}};
    const double r = rng.uniform();
    if (r < 0.15) {
      e.kind = KeyKind::Select;
    } else if (r < 0.27 && !has_type[parent]) {
      e.kind = KeyKind::TypeText;
      has_type[parent] = true;
    } else if (r < 0.39) {
      for (Direction d : kAllDirections) {
        if (!scroll_dirs[parent].count(d)) {
          e.kind = KeyKind::Scroll;
          e.direction = d;
          scroll_dirs[parent].insert(d);
          break;
        }
      }
    } else if (r < 0.47 && !has_enter[parent]) {
      e.kind = KeyKind::Enter;
      has_enter[parent] = true;
    }
    edges.push_back(e);
  }

  World w;
  w.seed = seed;
  w.home_screen = screen_id(0);
  std::vector<int> parent_count(n, 0);
  for (const auto& e : edges) ++parent_count[e.to];

  for (int s = 0; s < n; ++s) {
    // Link-bearing elements first, then decoys; order is shuffled before
    // layout so targets do not always sit at the top.
    std::vector<std::pair<std::string, int>> labelled;  // (label, edge index or -1)
    std::set<std::string> used;
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const auto& e = edges[i];
      if (e.from != s) continue;
      if (e.kind == KeyKind::Click || e.kind == KeyKind::Select) {
        labelled.emplace_back(noun_of[e.to], static_cast<int>(i));
        used.insert(noun_of[e.to]);
      } else if (e.kind == KeyKind::TypeText) {
        labelled.emplace_back(kFieldLabel, static_cast<int>(i));
        used.insert(kFieldLabel);
      }
    }
    std::vector<std::string> decoys(std::begin(kDecoyPool), std::end(kDecoyPool));
    rng.shuffle(decoys);
    for (const auto& d : decoys) {
      if (static_cast<int>(labelled.size()) >= p.elements_per_screen) break;
      if (used.insert(d).second) labelled.emplace_back(d, -1);
    }
    rng.shuffle(labelled);

    Observation obs;
    obs.screen_id = screen_id(s);
    obs.width = p.width;
    obs.height = p.height;
    const int slot = (p.height - 400) / std::max(p.elements_per_screen, 1);
    const int field_h = std::max(40, slot - 40);
    ScreenInfo inf;
    inf.app = s == 0 ? "" : app_names[app_of[s]];
    inf.title = s == 0 ? "Home" : (app_of[s] >= 0 && noun_of[s] == app_names[app_of[s]]
                                       ? noun_of[s] + " Home"
                                       : inf.app + " " + noun_of[s]);
    for (std::size_t i = 0; i < labelled.size(); ++i) {
      UiElement el;
      el.element_id = "e" + std::to_string(i);
      el.label = labelled[i].first;
      const int top = 200 + static_cast<int>(i) * slot;
      el.bbox = BBox{60, top, p.width - 60, top + field_h};
      obs.elements.push_back(el);
      const int edge_index = labelled[i].second;
      if (edge_index < 0) continue;
      const auto& e = edges[edge_index];
      TransitionKey key = e.kind == KeyKind::Select   ? TransitionKey::select(el.element_id)
                          : e.kind == KeyKind::TypeText ? TransitionKey::type_into(el.element_id)
                                                        : TransitionKey::click(el.element_id);
      w.transitions[{obs.screen_id, key}] = screen_id(e.to);
      if (e.kind == KeyKind::TypeText) {
        inf.field_text = kFieldTexts[rng.below(std::size(kFieldTexts))];
      }
    }
    w.screens.emplace(obs.screen_id, std::move(obs));
    w.info.emplace(screen_id(s), std::move(inf));
  }
  for (const auto& e : edges) {
    if (e.kind == KeyKind::Scroll) {
      w.transitions[{screen_id(e.from), TransitionKey::scroll(*e.direction)}] = screen_id(e.to);
    } else if (e.kind == KeyKind::Enter) {
      w.transitions[{screen_id(e.from), TransitionKey::simple(KeyKind::Enter)}] = screen_id(e.to);
    }
    if (parent_count[e.to] == 1) {
      w.transitions[{screen_id(e.to), TransitionKey::simple(KeyKind::PressBack)}] =
          screen_id(e.from);
    }
  }
  // Depth = BFS distance from home over forward edges.
  std::vector<int> depth(n, -1);
  depth[0] = 0;
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& e : edges) {
      if (depth[e.from] >= 0 && (depth[e.to] < 0 || depth[e.to] > depth[e.from] + 1)) {
        depth[e.to] = depth[e.from] + 1;
        changed = true;
      }
    }
  }
  for (int s = 0; s < n; ++s) w.info[screen_id(s)].depth = depth[s];
  return w;
}

std::uint64_t world_fingerprint(const World& w) { return text::fnv1a(Json(w).dump()); }

StepResult apply_action(const World& w, const std::string& screen_id, const Action& a) {
  const Observation& obs = w.screen(screen_id);
  auto lookup = [&](const TransitionKey& key) -> StepResult {
    auto it = w.transitions.find({screen_id, key});
    if (it == w.transitions.end()) return {screen_id, "no-op", false};
    return {it->second, to_string(key), false};
  };
  switch (a.kind) {
    case ActionType::Complete: return {screen_id, "complete", true};
    case ActionType::Close: return {screen_id, "close", true};
    case ActionType::PressHome: return {w.home_screen, "press_home", false};
    case ActionType::PressBack: return lookup(TransitionKey::simple(KeyKind::PressBack));
    case ActionType::Enter: return lookup(TransitionKey::simple(KeyKind::Enter));
    case ActionType::Scroll:
      if (!a.direction) return {screen_id, "no-op", false};
      return lookup(TransitionKey::scroll(*a.direction));
    case ActionType::Click:
    case ActionType::Select: {
      if (!a.point) return {screen_id, "no-op", false};
      const UiElement* el = obs.hit_test(*a.point);
      if (!el) return {screen_id, "no-op", false};
      return lookup(a.kind == ActionType::Click ? TransitionKey::click(el->element_id)
                                                : TransitionKey::select(el->element_id));
    }
    case ActionType::TypeText:
      for (const auto& [key, target] : w.outgoing(screen_id)) {
        if (key.kind == KeyKind::TypeText) return {target, to_string(key), false};
      }
      return {screen_id, "no-op", false};
    case ActionType::LongPress: return {screen_id, "no-op", false};
  }
  return {screen_id, "no-op", false};
}

}  // namespace ces
