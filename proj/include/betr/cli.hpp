#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace betr {

inline constexpr const char* kToolVersion = "1.0.0";

/// Exit codes: 0 success, 1 configuration error, 2 runtime error.
/// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace betr
