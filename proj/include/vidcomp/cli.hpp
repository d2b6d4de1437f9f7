#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace vidcomp::cli {

inline constexpr const char* kToolName = "vidcomp";
inline constexpr const char* kToolVersion = "0.1.0";

/// Runs one subcommand. `args` excludes the program name. Returns 0 on
/// success, 1 on input errors (bad flags, unreadable inputs), 2 on runtime
/// failures.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vidcomp::cli
