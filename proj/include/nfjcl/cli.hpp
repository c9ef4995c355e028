#pragma once

namespace nfjcl {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

/// Entry point of the nfjcl command-line tool; returns the process exit code.
int cli_main(int argc, char** argv);

}  // namespace nfjcl
