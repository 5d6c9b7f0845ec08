#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

#include "ces/core/types.hpp"

// JSON encoding for the shared domain types: snake_case field names,
// optional fields omitted when absent. Decoders throw Error(MalformedRecord)
// on shape mismatches.
namespace ces {

using Json = nlohmann::json;

void to_json(Json& j, const Point& p);
void from_json(const Json& j, Point& p);
void to_json(Json& j, const BBox& b);
void from_json(const Json& j, BBox& b);
void to_json(Json& j, const ScreenSize& s);
void from_json(const Json& j, ScreenSize& s);
void to_json(Json& j, const Action& a);
void from_json(const Json& j, Action& a);
void to_json(Json& j, const UiElement& e);
void from_json(const Json& j, UiElement& e);
void to_json(Json& j, const Observation& o);
void from_json(const Json& j, Observation& o);
void to_json(Json& j, const GroundTruthStep& g);
void from_json(const Json& j, GroundTruthStep& g);
void to_json(Json& j, const TaskStep& s);
void from_json(const Json& j, TaskStep& s);
void to_json(Json& j, const TaskRecord& t);
void from_json(const Json& j, TaskRecord& t);
void to_json(Json& j, const StateSummary& s);
void from_json(const Json& j, StateSummary& s);
void to_json(Json& j, const AtomicInstruction& a);
void from_json(const Json& j, AtomicInstruction& a);
void to_json(Json& j, const ExecutorOutput& e);
void from_json(const Json& j, ExecutorOutput& e);
void to_json(Json& j, const RewardBreakdown& r);
void from_json(const Json& j, RewardBreakdown& r);
void to_json(Json& j, const StepLog& s);
void from_json(const Json& j, StepLog& s);
void to_json(Json& j, const Trajectory& t);
void from_json(const Json& j, Trajectory& t);
void to_json(Json& j, const RewardConfig& c);
void from_json(const Json& j, RewardConfig& c);
void to_json(Json& j, const GrpoConfig& c);
void from_json(const Json& j, GrpoConfig& c);

// Rejects any key of `j` not in `allowed` with Error(ConfigError).
void reject_unknown_keys(const Json& j, const std::vector<std::string>& allowed,
                         std::string_view where);

// Compact single-line dump used for every JSON Lines record.
std::string dump_line(const Json& j);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);
// One JSON value per non-blank line. Throws Error(IoError) / Error(MalformedRecord)
// with the 1-based line number.
std::vector<Json> read_jsonl(const std::filesystem::path& path);
void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& records);

template <typename T>
std::vector<T> read_jsonl_as(const std::filesystem::path& path) {
  std::vector<T> out;
  for (const auto& j : read_jsonl(path)) out.push_back(j.get<T>());
  return out;
}

template <typename T>
void write_jsonl_of(const std::filesystem::path& path, const std::vector<T>& items) {
  std::vector<Json> records;
  records.reserve(items.size());
  for (const auto& item : items) records.emplace_back(item);
  write_jsonl(path, records);
}

}  // namespace ces
