#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace sdagan::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kIo = 2,
  kDivergence = 3,
  kVerificationFailed = 4,
};

/// Subcommands in help order.
const std::vector<std::string>& commands();

/// Every key accepted by a subcommand, both as `--key` and as `key = value`
/// in the file given by --config.
std::vector<std::string> config_keys(std::string_view command);

/// The --help text of a subcommand (or of the program for "").
std::string help_text(std::string_view command);

/// Runs `sdagan <args...>` (args excludes the program name). Diagnostics go
/// to `err` as one line; regular output to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sdagan::cli
