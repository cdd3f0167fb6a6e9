#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace irt::cli {

enum ExitCode : int {
  kOk = 0,
  kInputError = 2,
  kDegenerate = 3,
  kIoError = 4,
};

/// Runs the command line `args` (without the program name). Progress goes
/// to `out`; failures print one `error: <category>: <detail>` line to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace irt::cli
