#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace conjassess {

/// Runs one CLI command (args exclude the program name). Returns 0 on
/// success, 2 on input errors, 3 on numerical failures.
int cli_main(std::vector<std::string> args, std::ostream& out, std::ostream& err);

}  // namespace conjassess
