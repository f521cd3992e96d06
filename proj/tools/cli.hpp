#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cvselect::cli {

/// Exit codes: 0 success, 1 computation failure, 2 usage or config error.
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;
inline constexpr int kUsage = 2;

/// Runs the command line `args` (args[0] is the program name). Reports go
/// to `out` unless --out names a directory; diagnostics and the human
/// summary go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cvselect::cli
