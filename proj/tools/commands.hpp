#pragma once

#include <iosfwd>

namespace sem::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

/// Full command line, including the program name. Output goes to `out`
/// unless --out or the config's "out" names a file.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sem::cli
