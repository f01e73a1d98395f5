#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace smoothnest {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitNumerical = 2 };

/// Subcommands: kernel-eval, fit, predict, allocate, cv, simulate, run, report.
/// Results go to `out`, diagnostics to `err`.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int cli_main(int argc, char** argv);

}  // namespace smoothnest
