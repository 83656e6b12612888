#pragma once

// Command dispatch shared by the C API and the command-line tool.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace magedge {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { exit_ok = 0, exit_usage = 1, exit_certificate = 2 };

struct RunOptions {
  std::optional<std::uint64_t> seed;  // overrides the config
  std::optional<int> workers;         // overrides the config; 0 = available parallelism
  bool quiet = false;
};

std::vector<std::string> command_names();

/// Runs flux, butterfly, sweep, fit, verify or harness, writing data files
/// and manifest.json into `out_dir`. Never throws: failures become exit codes
/// with a message on `err`.
int run_command(const std::string& command, const std::string& config_text, const std::string& out_dir,
                const RunOptions& options, std::ostream& log, std::ostream& err);

}  // namespace magedge
