#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace edithumor {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumeric = 3;

/// Entry point of the `edithumor` tool: `train`, `predict`, `eval-task1`,
/// `eval-task2`, `gradcheck`. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace edithumor
