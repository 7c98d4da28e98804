#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace catebench {

// Exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitInput = 2,
  kExitEmptyArm = 3,
  kExitInconsistent = 4,
  kExitRankDeficient = 5,
};

// Runs `catebench <subcommand> ...`; args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace catebench
