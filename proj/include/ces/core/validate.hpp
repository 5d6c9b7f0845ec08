#pragma once

#include <string>
#include <vector>

#include "ces/core/types.hpp"

namespace ces {

// Empty iff every TaskRecord / GroundTruthStep / Observation invariant holds.
// Each entry names the offending step ("step 2: click without bbox").
// Tasks whose metadata sets "terminating" to "false" skip the final-step rule.
std::vector<std::string> validate_task(const TaskRecord& task);

std::vector<std::string> validate_observation(const Observation& obs);

// StepLog index chaining and the status/last-action rule.
std::vector<std::string> validate_trajectory(const Trajectory& traj);

}  // namespace ces
