#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace securakit {

/// Exit status contract of the command-line front end.
enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 1,
  kExitNumerical = 2,
  kExitUsage = 3,
};

/// Runs one CLI invocation. `args` excludes the program name. Reports go to
/// `out` (or the --out file), diagnostics to `err`, one line each.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace securakit
