#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace pacoh {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitNumerical = 3 };

struct CliOptions {
  std::string command;  // bounds | meta-train | meta-test | bo
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  int threads = 1;
  bool mll_only = false;
};

// Runs one subcommand and maps failures onto the exit codes above.
int run_command(const CliOptions& opts);

// Reads PACOH_LAB_LOG (error | info | debug).
void configure_logging();

}  // namespace pacoh
