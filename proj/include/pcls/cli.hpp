#pragma once

#include <iosfwd>

namespace pcls {

/// Exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitDifference = 1,
  kExitConfig = 2,
  kExitSolver = 3,
  kExitIterationCap = 4,
};

/// Environment variable naming the base directory for relative output dirs.
inline constexpr const char* kOutputDirEnv = "PCLS_OUTPUT_DIR";

/// Entry point of the `pcls` tool; writes to `out`/`err` instead of the process streams.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pcls
