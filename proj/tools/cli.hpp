#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace xaibench {

/// Runs the command line `args` (without the program name). Returns 0 on
/// success, 1 on a usage error and 2 when the command fails.
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace xaibench
