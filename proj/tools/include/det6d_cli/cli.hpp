#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace det6d::cli {

/// Runs one command line (without the program name). The machine-readable
/// JSON summary goes to `out` unless --summary names a file; human-readable
/// progress goes to `err`. Returns 0 on success, 1 on data errors and 2 on
/// usage errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace det6d::cli
