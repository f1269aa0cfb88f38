#pragma once

// The `csqbm` command line: train, eval, sample, gradcheck, plot.

#include <iosfwd>
#include <string>
#include <vector>

namespace csqbm {

inline constexpr const char* kArtifactVersion = "0.1.0";

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitIo = 2,
  kExitTolerance = 3,
  kExitDivergence = 4,
};

/// `args` excludes the program name. Never throws; errors go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace csqbm
