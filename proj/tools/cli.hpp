#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace zlab::cli {

enum ExitCode : int { kOk = 0, kInputError = 1, kResourceError = 2, kCounterexample = 3 };

/// Parses argv (argv[0] is the program name), runs the subcommand and writes
/// the result to `out` or to --output.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Convenience overload for tests: args exclude the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace zlab::cli
