#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ces/core/serialize.hpp"
#include "ces/core/types.hpp"
#include "ces/orchestrator/backend.hpp"
#include "ces/orchestrator/loop.hpp"
#include "ces/sim/world.hpp"

namespace ces {

// kind "oracle": tables derived from the world and task suite.
// kind "scripted": JSON object of context key -> response text.
// kind "toy": serialized ToyPolicy, sampled or greedy.
// kind "remote": chat-completion endpoint.
struct BackendDescriptor {
  std::string kind;
  std::optional<std::filesystem::path> table;
  std::optional<std::filesystem::path> policy;
  bool greedy = false;
  std::optional<std::string> default_response;
  RemoteConfig remote;
};

struct HarnessConfig {
  std::uint64_t seed = 0;
  RewardConfig reward;
  GrpoConfig grpo;
  LoopConfig loop;
  std::optional<BackendDescriptor> coordinator;
  std::optional<BackendDescriptor> executor;
  std::optional<BackendDescriptor> state_tracker;
  std::optional<BackendDescriptor> judge;
  std::optional<std::filesystem::path> world;
  std::optional<std::filesystem::path> tasks;
  std::optional<std::filesystem::path> templates;
  std::optional<std::filesystem::path> output;
  int parallelism = 1;
};

// Seed is mandatory; unknown keys are rejected; relative paths resolve
// against base_dir and input paths must exist. Throws Error(ConfigError).
HarnessConfig parse_config(const Json& j, const std::filesystem::path& base_dir);
HarnessConfig load_config(const std::filesystem::path& path);

// Builds a backend for `role`. Oracle executors need the world, oracle
// coordinators and trackers need the tasks. Throws Error(ConfigError).
std::shared_ptr<const PolicyBackend> make_backend(const BackendDescriptor& d, AgentRole role,
                                                  const World* world,
                                                  const std::vector<TaskRecord>* tasks);

}  // namespace ces
