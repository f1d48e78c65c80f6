#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace idarr::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kIo = 2,
  kNumerical = 3,
  kPropertyViolation = 4,
};

/// Runs the command line `args` (args[0] is the program name) and
/// returns the process exit code. Never throws.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace idarr::cli
