#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pnr::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,  ///< bad flags or config
  kIo = 2,
  kCalibration = 3,
  kCompatibility = 4,
  kInsufficientData = 5,
};

/// Runs one `pnr` invocation. `args` excludes the program name. Summaries
/// go to `out`, one JSON error object to `err` on failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pnr::cli
