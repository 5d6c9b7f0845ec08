#include "ces/core/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>

#include "ces/core/text.hpp"

namespace ces::log {

namespace {

Level initial_level() {
  const char* env = std::getenv("CES_LOG_LEVEL");
  if (!env) return Level::Warn;
  const std::string v = text::to_lower(env);
  if (v == "debug") return Level::Debug;
  if (v == "info") return Level::Info;
  if (v == "error") return Level::Error;
  if (v == "off") return Level::Off;
  return Level::Warn;
}

std::atomic<Level>& current() {
  static std::atomic<Level> lvl{initial_level()};
  return lvl;
}

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

void set_level(Level level) { current().store(level); }
Level level() { return current().load(); }

void write(Level lvl, std::string_view message) {
  if (lvl < current().load()) return;
  static constexpr const char* kNames[] = {"debug", "info", "warn", "error"};
  std::lock_guard<std::mutex> lock(sink_mutex());
  std::cerr << "[ces " << kNames[static_cast<int>(lvl)] << "] " << message << '\n';
}

}  // namespace ces::log
