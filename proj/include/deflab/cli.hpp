#pragma once

#include <iosfwd>

namespace deflab {

/// Exit codes: 0 all verdicts pass, 1 some verdict fails, 2 usage, config or domain error.
inline constexpr int kExitPass = 0;
inline constexpr int kExitFail = 1;
inline constexpr int kExitError = 2;

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace deflab
