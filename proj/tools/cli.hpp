#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace stg::cli {

/// Runs the `stg` command line. args excludes the program name. Returns the
/// process exit code: 0 success, 2 usage, 3 data, 4 numerical.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace stg::cli
