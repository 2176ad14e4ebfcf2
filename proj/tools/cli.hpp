#pragma once

#include <string>
#include <vector>

namespace copp::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kValidation = 2,
  kNotConverged = 3,
  kResourceGuard = 4,
};

/// Runs one subcommand. args[0] is the program name.
int run(const std::vector<std::string>& args);

}  // namespace copp::cli
