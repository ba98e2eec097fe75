#pragma once

#include <iosfwd>

namespace hybridrf::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kIo = 3,
  kInternal = 4,
};

// Entry point for the `hybridrf` tool: train, predict, eval, bench, coverage.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hybridrf::cli
