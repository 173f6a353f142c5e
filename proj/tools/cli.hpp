#pragma once

#include <iosfwd>

namespace lidomaug::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
};

/// Runs one command line (argv[0] is the program name). Reports go to `out`,
/// diagnostics and progress to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lidomaug::cli
