#pragma once

#include <string>
#include <vector>

namespace pseudocam::cli {

/// Exit codes shared by every subcommand.
enum ExitCode : int {
  kOk = 0,
  kGateFailed = 1,
  kFormat = 2,
  kPrecondition = 3,
  kMissingArtifact = 4,
};

int run(int argc, char** argv);
int run(const std::vector<std::string>& args);

}  // namespace pseudocam::cli
