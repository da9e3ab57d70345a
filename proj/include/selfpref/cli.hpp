#pragma once

#include <iosfwd>

namespace selfpref::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfigError = 2,
  kIngestionError = 3,
  kCollectionError = 4,
  kDegenerateStatistics = 5,
};

/// Parses arguments and runs one command. Reports go to --out (written via a
/// temporary file and renamed) or to `out`; diagnostics go to `err` as one
/// JSON object per line.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

int run(int argc, const char* const* argv);

}  // namespace selfpref::cli
