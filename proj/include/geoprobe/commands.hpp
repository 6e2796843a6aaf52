#pragma once

#include <filesystem>
#include <ostream>
#include <vector>

#include "geoprobe/error.hpp"
#include "geoprobe/run_config.hpp"
#include "geoprobe/synthetic.hpp"

namespace geoprobe::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitData = 3,
  kExitConnectivity = 4,
};

int exit_code_for(ErrorCode code);

/// Sets the spdlog level from GEOPROBE_LOG (trace, debug, info, warn, error,
/// off). Default warn.
void configure_logging();

// Each command throws geoprobe::Error; `run` maps it to an exit code.

/// Fits a reference classifier on `train_dataset`, writes the checkpoint and
/// <output_dir>/train_report.json.
void cmd_train(const RunConfig& config, std::ostream& out);

/// Attacks `dataset`, writes <output_dir>/report.json and
/// <output_dir>/adversarial_examples.txt, prints the metrics table.
void cmd_attack(const RunConfig& config, std::ostream& out);

/// Prints one merged metrics table for the given structured reports.
void cmd_report(const std::vector<std::filesystem::path>& reports, std::ostream& out);

/// Writes a seeded synthetic corpus plus a ready-to-use config.json into
/// `output_dir`.
void cmd_synth(const SyntheticSpec& spec, const std::filesystem::path& output_dir, std::ostream& out);

/// Full command line: `geoprobe [--config P] [--seed N] [--workers N] <cmd> ...`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace geoprobe::cli
