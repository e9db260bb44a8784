#pragma once

#include <ostream>

namespace adot::cli {

enum ExitCode : int { kOk = 0, kInputError = 1, kNumericalError = 2 };

/// Runs one command line (argv[0] is the program name). The report goes to
/// the --out file when given, to `out` otherwise; diagnostics go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace adot::cli
