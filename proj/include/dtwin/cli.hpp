#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace dtwin {

/// Exit codes: 0 success, 1 domain failure, 2 I/O or usage error.
/// `args` excludes the program name.
int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err);

}  // namespace dtwin
