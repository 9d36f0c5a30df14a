#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace epr::cli {

// Runs the tool on `args` (args[0] is the program name). Returns 0 on
// success, 1 on validation / domain / IO errors, 2 on usage errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace epr::cli
