#pragma once

#include <iosfwd>
#include <string>

#include "dmf/config.hpp"
#include "dmf/estimate.hpp"

namespace dmf {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitViolation = 2;

/// Result of one method run: exit code and the one-line summary.
struct RunOutcome {
  int exit_code = kExitOk;
  std::string summary;
};

/// Runs cfg.text("method"). Newline-delimited JSON records go to `json`; the
/// CSV mirror to `csv` when non-null. Records never contain worker counts,
/// output paths or timings, so they depend only on the config and seed.
RunOutcome run_method(const RunConfig& cfg, Exec exec, std::ostream& json, std::ostream* csv);

/// Command-line entry point; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dmf
