#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace compsnn::cli {

/// Runs the `compsnn` command line. `args` excludes the program name.
/// Returns 0 on success, 2 on usage errors and 1 on data or config errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace compsnn::cli
