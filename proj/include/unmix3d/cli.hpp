#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace unmix3d::cli {

// Process exit codes.
enum ExitCode : int {
  kSuccess = 0,
  kCheckFailed = 1,  // gradcheck found a tensor above tolerance
  kUsageError = 2,
  kIoError = 3,
  kNumericalError = 4,
};

// Runs one command line (without the program name), e.g.
// {"extract", "--in", "scene.hsc", "--materials", "4", "--out", "e.csv"}.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace unmix3d::cli
