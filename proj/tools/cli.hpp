#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mcdgln::cli {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 2,
  kDataError = 3,
  kNumericalError = 4,
  kCheckpointError = 5,
};

/// Runs one invocation; args exclude the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mcdgln::cli
