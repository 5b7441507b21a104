#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace catbbm::cli {

enum ExitCode : int {
  kSuccess = 0,
  kInternalError = 1,
  kConfigError = 2,
  kAssertionFailure = 3,
};

/// Runs `catbbm <args...>` (args excludes the program name).
int run(std::vector<std::string> args, std::ostream& out, std::ostream& err);

/// Merges a key=value config file into args: every key not already given
/// as --key on the command line is appended as --key value.
std::vector<std::string> merge_config_file(std::vector<std::string> args);

}  // namespace catbbm::cli
