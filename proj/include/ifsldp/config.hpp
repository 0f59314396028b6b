#pragma once

// Experiment configuration: one YAML file per experiment, parsed into the
// core types with line-anchored diagnostics and pinned by a hash of its
// canonical (defaults filled in) form.

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ifsldp/ifs_core.hpp"
#include "ifsldp/tropical.hpp"
#include "json.hpp"

namespace ifsldp {

struct Tolerances {
  double eigen = 1e-13;
  double gibbs = 1e-13;
  double discounted = 1e-9;
  double calibration = 1e-8;
  double aubry = 1e-8;
  double invariance = 1e-9;
  double ldp = 0.1;
  double varadhan = 0.05;
};

struct ExperimentConfig {
  std::string source = "<config>";

  IfsSystem system;
  Potential potential;
  std::size_t n_points = 257;
  std::size_t symbolic_depth = 12;
  std::vector<double> betas{1, 2, 5, 10, 20, 50, 100};
  int discount_kmax = 16;
  Tolerances tol;
  CalibrationMethod method = CalibrationMethod::policy;
  std::vector<double> ball_centers{0.0, 0.5};
  double ball_radius = 0.125;
  std::string output_directory = ".";
  std::vector<std::string> formats{"csv", "json"};

  /// 1-based source line of each top-level block, for diagnostics.
  std::map<std::string, int> lines;

  /// Canonical form; output.directory is left out so the hash names the
  /// experiment rather than where it was written.
  nlohmann::json canonical() const;
  /// FNV-1a 64 of canonical().dump(), 16 hex digits.
  std::string hash() const;

  bool wants(const std::string& format) const;
};

/// KEY=VALUE with KEY a dotted path to a scalar, e.g. tolerances.ldp=0.2.
using Override = std::pair<std::string, std::string>;
Override parse_override(const std::string& text);

ExperimentConfig parse_config(const std::string& yaml_text, const std::string& source,
                              const std::vector<Override>& overrides = {});
ExperimentConfig load_config(const std::string& path, const std::vector<Override>& overrides = {});

/// System, potential, grid and schedule checks; messages carry the block line.
ValidationReport validate_config(const ExperimentConfig& cfg);

}  // namespace ifsldp
