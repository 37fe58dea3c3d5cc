#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pasm {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitVerification = 2;

/// Entry point of the `pasm` tool. `args` excludes the program name.
/// Subcommands: quantize, run, simulate, cost, sweep, selftest.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pasm
