#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sdem {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitUsage = 2,
  kExitData = 3,
  kExitNumeric = 4,
  kExitVersion = 5,
};

inline constexpr const char* kVersion = "0.1.0";

// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sdem
