#pragma once

#include <atomic>
#include <filesystem>
#include <mutex>
#include <unistd.h>
#include <string>
#include <vector>

#include "ces/core/rng.hpp"
#include "ces/core/serialize.hpp"
#include "ces/orchestrator/backend.hpp"
#include "ces/sim/world.hpp"

namespace ces::test_util {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("ces-test-" + tag + "-" + std::to_string(::getpid()) + "-" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(CES_FIXTURE_DIR) / name;
}

// Returns the given responses in order, cycling.
class CyclingBackend : public PolicyBackend {
 public:
  CyclingBackend(AgentRole role, std::vector<std::string> responses)
      : PolicyBackend(role), responses_(std::move(responses)) {}
  std::string_view kind() const override { return "cycling"; }
  BackendResponse generate(const BackendRequest&, Rng&) const override {
    std::lock_guard<std::mutex> lock(mu_);
    return {responses_[next_++ % responses_.size()], -1.0};
  }

 private:
  std::vector<std::string> responses_;
  mutable std::mutex mu_;
  mutable std::size_t next_ = 0;
};

// Records every request, then answers from an inner backend.
class RecordingBackend : public PolicyBackend {
 public:
  explicit RecordingBackend(std::shared_ptr<const PolicyBackend> inner)
      : PolicyBackend(inner->role()), inner_(std::move(inner)) {}
  std::string_view kind() const override { return "recording"; }
  BackendResponse generate(const BackendRequest& req, Rng& rng) const override {
    {
      std::lock_guard<std::mutex> lock(mu_);
      requests_.push_back(req);
    }
    return inner_->generate(req, rng);
  }
  std::vector<BackendRequest> requests() const {
    std::lock_guard<std::mutex> lock(mu_);
    return requests_;
  }

 private:
  std::shared_ptr<const PolicyBackend> inner_;
  mutable std::mutex mu_;
  mutable std::vector<BackendRequest> requests_;
};

// Three screens in a chain a -> b -> c via buttons; c has a "New Meeting"
// button leading to d. Element bboxes are full-width rows.
inline Json chain_world_spec() {
  auto screen = [](const std::string& id, const std::string& app, const std::string& title,
                   int depth, std::vector<std::pair<std::string, std::string>> elements) {
    Json els = Json::array();
    int top = 200;
    for (const auto& [eid, label] : elements) {
      els.push_back({{"element_id", eid}, {"label", label}, {"bbox", {60, top, 1020, top + 200}}});
      top += 250;
    }
    return Json{{"screen_id", id}, {"app", app},     {"title", title},      {"depth", depth},
                {"width", 1080},   {"height", 2400}, {"is_terminal", false}, {"elements", els}};
  };
  Json screens = Json::array();
  screens.push_back(screen("a", "", "Home", 0, {{"e0", "Meetings"}}));
  screens.push_back(screen("b", "Zoom", "Zoom Home", 1, {{"e0", "Schedule"}, {"e1", "Help"}}));
  screens.push_back(screen("c", "Zoom", "Zoom Schedule", 2, {{"e0", "New Meeting"}}));
  screens.push_back(screen("d", "Zoom", "Zoom New Meeting", 3, {{"e0", "Save"}}));
  screens.push_back(screen("z", "Other", "Island", 1, {}));
  Json transitions = Json::array({
      {{"from", "a"}, {"key", "click:e0"}, {"to", "b"}},
      {{"from", "b"}, {"key", "click:e0"}, {"to", "c"}},
      {{"from", "c"}, {"key", "click:e0"}, {"to", "d"}},
      {{"from", "b"}, {"key", "press_back"}, {"to", "a"}},
      {{"from", "c"}, {"key", "press_back"}, {"to", "b"}},
      {{"from", "d"}, {"key", "press_back"}, {"to", "c"}},
  });
  return Json{{"seed", 0}, {"home_screen", "a"}, {"screens", screens}, {"transitions", transitions}};
}

}  // namespace ces::test_util
