#pragma once

#include <string>
#include <vector>

namespace ecgvae {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitNumeric = 3 };

/// Runs one subcommand. args[0] is the program name. Failures print one line
/// "error: <usage|data|numeric>: <reason>" to stderr.
int cli_dispatch(const std::vector<std::string>& args);

}  // namespace ecgvae
