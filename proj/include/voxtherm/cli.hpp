#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace voxtherm {

inline constexpr const char* kToolVersion = "0.1.0";

/// Exit codes.
enum ExitCode : int { kExitOk = 0, kExitIo = 1, kExitUsage = 2, kExitValidation = 3, kExitNumeric = 4 };

/// Runs one command line (args excludes the program name). Failures print a
/// single line "error <category>: <message>" to `err` and remove partial
/// outputs.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args);

}  // namespace voxtherm
