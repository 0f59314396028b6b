#pragma once

// The five experiment commands. Each validates the config, runs the chain,
// writes its files and returns a JSON summary together with the lines meant
// for the terminal. Library errors propagate as ifsldp::Error.

#include <cstddef>
#include <string>
#include <vector>

#include "ifsldp/config.hpp"
#include "ifsldp/error.hpp"
#include "json.hpp"

namespace ifsldp {

struct RunOptions {
  std::string out_dir;  // empty: the config's output.directory
  std::size_t threads = 1;
};

struct RunResult {
  int exit_code = 0;
  nlohmann::json summary;
  std::vector<std::string> messages;
  std::vector<std::string> files;
};

/// Process exit code for an error category.
int exit_code_for(ErrorCode code);

RunResult run_validate(const ExperimentConfig& cfg);
RunResult run_thermo(const ExperimentConfig& cfg, double beta, const RunOptions& opt = {});
RunResult run_tropical(const ExperimentConfig& cfg, const RunOptions& opt = {});
RunResult run_ldp(const ExperimentConfig& cfg, const RunOptions& opt = {});

enum class OracleTarget { mane, density, rate };
OracleTarget parse_oracle_target(const std::string& name);

/// depth 0 means the config's symbolic.depth.
RunResult run_oracle(const ExperimentConfig& cfg, OracleTarget target, std::size_t depth = 0,
                     const RunOptions& opt = {});

}  // namespace ifsldp
