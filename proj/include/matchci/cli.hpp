#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace matchci {

// One CLI invocation; args exclude the program name. The JSON result goes to
// --output when given, otherwise to `out`; diagnostics go to `err`. Exit
// codes: 0 success, 2 unparseable input, 3 precondition or configuration
// error, 4 resampling failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace matchci
