#pragma once

#include "kdpc/data.hpp"
#include "kdpc/experiments.hpp"
#include "kdpc/predictor.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace kdpc {

/// Everything a collect / fit / run invocation needs. See the README for
/// the file schema.
struct RunConfig {
  VdpParams plant;
  Eigen::Index t_ini = 10;
  Eigen::Index n_horizon = 15;
  CollectionConfig collection;
  std::size_t validation_runs = 300;
  // lambda_min(K_pp) at or below 0 is a failure; below this it is a warning.
  double pe_warn_threshold = 1e-9;
  FitConfig fit;
  ExperimentSettings experiment;
  std::vector<Scenario> scenarios;
  std::uint64_t seed = 0;
  std::string output_dir = "results";

  void validate() const;
  /// Controller configs carry their own t_ini / n_horizon; this keeps them
  /// in sync with the top level.
  void sync_horizons();
};

/// Defaults including the two benchmark scenarios.
RunConfig default_config();

/// Parses YAML text. Missing keys keep their defaults; unknown keys,
/// malformed values and invalid combinations raise ErrorCode::config.
RunConfig parse_config(const std::string& yaml_text);

RunConfig load_config(const std::filesystem::path& path);

/// Canonical YAML rendering; parse_config(to_yaml(c)) reproduces c.
std::string to_yaml(const RunConfig& cfg);

}  // namespace kdpc
