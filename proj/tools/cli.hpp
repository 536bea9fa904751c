#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cmpairs::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDataError = 2;
inline constexpr int kExitUsage = 64;

/// Runs one invocation. args[0] is the program name. Artifacts go to the
/// --out path (or `out` when absent); errors are reported on `err`, data
/// errors as a one-line JSON object.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cmpairs::cli
