#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace snl {

// Exit codes of the command-line tool.
enum ExitCode : int { exit_ok = 0, exit_check_failed = 1, exit_usage = 2 };

/// Runs one `snl` command; `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace snl
