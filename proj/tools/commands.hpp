#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace polyglot::cli {

enum ExitCode : int {
    kOk = 0,
    kInternal = 1,
    kUsage = 2,
    kDataError = 3,
    kNumericError = 4,
};

/// Runs one CLI invocation; `args` excludes the program name. Errors are
/// reported on `err` as a single line: `polyglot: error[<kind>]: <message>`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace polyglot::cli
