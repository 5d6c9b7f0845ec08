#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "ces/core/error.hpp"

namespace ces {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitBackend = 4;

// Exit code for a failure of the given kind.
int exit_code_for(Errc code);

// Runs the `ces` command line; args excludes the program name. Subcommands:
// gen-world, run, eval, rollout, train-toy, probe-temporal.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ces
