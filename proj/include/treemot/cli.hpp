#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace treemot {

/// Runs the command line with `args` (program name excluded). Returns the
/// process exit code: 0 success, 1 invalid input, 2 no convergence.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace treemot
