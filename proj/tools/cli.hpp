#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace upad::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Parses and runs one command. `args` excludes the program name. Data goes
/// to files or `out`; diagnostics go to `err` as a single line.
int execute(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace upad::cli
