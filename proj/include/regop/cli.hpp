#ifndef REGOP_CLI_HPP_
#define REGOP_CLI_HPP_

#include <iosfwd>

namespace regop {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // computation failed or a check did not hold
inline constexpr int kExitUsage = 2;    // bad flags or malformed input

/// Entry point of the `regop` tool. Reports go to `out` (or --output),
/// diagnostics to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace regop

#endif  // REGOP_CLI_HPP_
