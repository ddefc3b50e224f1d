#pragma once

#include <cstdint>
#include <iosfwd>
#include <string_view>

namespace zakai {

enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_stability = 3, exit_numerical = 4 };

/// Runs the experiment command line (argv[0] is the program name). Output files go
/// to --out; summaries go to `out`, diagnostics to `err`. Returns the exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view text);

}  // namespace zakai
