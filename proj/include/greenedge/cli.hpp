#pragma once

namespace greenedge {

// Exit codes of the greenedge command.
inline constexpr int kExitOk         = 0;
inline constexpr int kExitValidation = 1; // usage, config or input error
inline constexpr int kExitRuntime    = 2;

/// Parses and runs one command line. Diagnostics go to standard error;
/// results are written below the --out directory only.
int runCli(int argc, const char* const* argv);

} // namespace greenedge
