#pragma once

#include <ostream>

namespace dynrisk::cli {

enum ExitCode : int {
  kPass = 0,
  kCheckFailed = 1,
  kInputError = 2,
  kNumericalError = 3,
  kSearchExhausted = 4,
};

/// Parses arguments, runs one subcommand and returns its exit code.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace dynrisk::cli
