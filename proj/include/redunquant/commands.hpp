#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "redunquant/config.hpp"

namespace redunquant {

enum class Command { Verify, Synth, Redundancy, SweepEps, SweepTime, Simulate, FpGrid };

Command parse_command(const std::string& name);
std::string to_string(Command c);

/// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 1,
  kExitNotReliable = 2,
  kExitNumerical = 3,
};

/// Flags that override the config file.
struct CliOverrides {
  std::optional<Method> method;
  std::optional<std::uint64_t> seed;
  bool paper_literal_jacobian = false;
  std::optional<AvgNormalization> normalization;
  std::optional<unsigned> threads;
};

void apply_overrides(ProblemSpec& spec, const CliOverrides& o);

/// Runs one command and writes report.json (plus a CSV for sweeps, samples
/// and grids) into out_dir. Returns the exit code; diagnostics go to `err`.
int run_command(Command cmd, ProblemSpec spec, const std::filesystem::path& out_dir,
                std::ostream& err);

/// Maps the exception currently being handled onto an exit code.
int exit_code_for_current_exception(std::ostream& err);

}  // namespace redunquant
