#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mixred::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;

/// Parses `args` (without the program name) and runs the selected command.
/// Results go to `out` or to the --out file, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mixred::cli
