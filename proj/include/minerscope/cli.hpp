#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace minerscope::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDataError = 1;
inline constexpr int kExitUsage = 2;

const char* version();

/// Runs one subcommand. `args` excludes the program name. Diagnostics go
/// to `err`; a one-line summary of the written files goes to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace minerscope::cli
