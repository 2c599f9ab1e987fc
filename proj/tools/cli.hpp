#pragma once

#include <iosfwd>

namespace dunkl::cli {

// Exit codes
inline constexpr int kPass = 0;
inline constexpr int kFail = 1;
inline constexpr int kUnsupported = 2;
inline constexpr int kUsage = 64;
inline constexpr int kData = 65;

// argv[0] is the program name; subcommands verify, decompose, report.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dunkl::cli
