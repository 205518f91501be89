#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mctsgen::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitBackend = 3;
inline constexpr int kExitParse = 4;

/// Runs the command line `args` (args[0] is the program name). Results go
/// to `out`, diagnostics to `err`; returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mctsgen::cli
