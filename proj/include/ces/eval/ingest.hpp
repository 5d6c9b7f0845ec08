#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ces/core/serialize.hpp"
#include "ces/core/types.hpp"

namespace ces {

// Maps TaskRecord fields onto source field names. Canonical keys:
//   task level: task_id, instruction, steps
//   step level: action, bbox, text, direction, gt_state, gt_instruction,
//               image, screen_width, screen_height
// A trailing '?' on the source name marks the field optional.
struct SchemaDescriptor {
  std::map<std::string, std::string> fields;
  // Whether episodes end with a terminal action.
  bool terminating = true;

  // Source names equal to the canonical names; all step fields optional
  // except action.
  static SchemaDescriptor canonical();
  // {"fields": {...}, "terminating": bool}; throws Error(UnknownSchemaField)
  // on an unknown canonical key.
  static SchemaDescriptor from_json(const Json& j);
};

const std::vector<std::string>& schema_canonical_keys();

struct IngestResult {
  std::vector<TaskRecord> tasks;
  std::size_t skipped = 0;
  std::vector<std::string> skip_reasons;  // "line N: reason"
};

// Throws Error(IoError) when the file cannot be read and
// Error(UnknownSchemaField) when a required source field is absent from the
// first record. Later records that fail conversion or validate_task are
// skipped and counted.
IngestResult ingest_benchmark(const std::filesystem::path& path, const SchemaDescriptor& schema);

}  // namespace ces
