#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ueval::cli {

inline constexpr int kExitSuccess = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitUndefined = 3;  // every requested metric undefined

/// Parses and runs one invocation (argv without the program name). Human
/// output goes to `out`, diagnostics to `err`. Identical argument vectors
/// over identical input files produce byte-identical artifacts and output.
int run_command(const std::vector<std::string>& args, std::ostream& out,
                std::ostream& err);

}  // namespace ueval::cli
