#pragma once

#include <iosfwd>

namespace attrakt::cli {

/// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kCheckFailed = 1,
  kNotCertifiable = 2,
  kSolverFailure = 3,
  kInputError = 4,  // unreadable or malformed files, bad arguments
  kDimensionError = 5,
};

/// Entry point of the `attrakt` tool: era, check, simulate, contour.
int Run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace attrakt::cli
