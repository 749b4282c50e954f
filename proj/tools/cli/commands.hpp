#pragma once

#include "config.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace parametrix::cli {

enum ExitCode : int { kPass = 0, kNumericalFail = 1, kUsageError = 2 };

struct ProducedFile {
  std::string path;
  double seconds = 0.0;
};

/// Files written by one command and its pass/fail flags; serialized as manifest.json.
struct RunManifest {
  std::string command;
  std::string config_hash;
  std::string tool_version;
  std::vector<ProducedFile> files;
  std::vector<std::pair<std::string, bool>> flags;
  double total_seconds = 0.0;
};

/// Prints per-assumption results; 0 iff all pass.
int cmd_validate(const ExperimentConfig& config, std::ostream& log);

/// density.csv: y,p_series,p_chain,p_frozen,weighted_gap,status on the series grid.
int cmd_density(const ExperimentConfig& config, const std::string& out_dir, std::ostream& log);

/// chain_density.csv: y,p_chain for n = density.n from density.s to density.t.
int cmd_chain_density(const ExperimentConfig& config, const std::string& out_dir, std::ostream& log);

/// rate.csv, rate_profile.csv, rate_summary.json, rate.gp; 0 iff the slope lies in the band.
int cmd_rate(const ExperimentConfig& config, const std::string& out_dir, std::ostream& log);

/// correction.csv, correction_summary.json, correction.gp; 0 iff |residual| / h decreases.
int cmd_correct(const ExperimentConfig& config, const std::string& out_dir, std::ostream& log);

/// Parses arguments, dispatches and maps exceptions to exit codes.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace parametrix::cli
