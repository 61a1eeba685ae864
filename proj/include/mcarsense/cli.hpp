#pragma once

#include <iosfwd>

namespace mcarsense {

/// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitCompute = 3;

/// Entry point of the `mcarsense` tool (subcommands simulate, fit, coverage, serve).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mcarsense
