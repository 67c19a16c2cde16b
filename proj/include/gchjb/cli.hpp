// Command-line driver: solve | verify | study | simulate with a JSON config.
//
// Exit codes: 0 success, 1 configuration error, 2 solver failure,
// 3 property failure.
#pragma once

#include <iosfwd>

namespace gchjb {

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitSolver = 2, kExitProperty = 3 };

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gchjb
