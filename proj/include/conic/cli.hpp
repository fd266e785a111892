#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace conic {

/// Runs the command line tool. `args` excludes the program name. Returns the
/// process exit code: 0 success, 1 usage or I/O error, 2 when the statistic
/// does not exist for the given data.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace conic
