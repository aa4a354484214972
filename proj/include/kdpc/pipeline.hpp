#pragma once

#include "kdpc/config.hpp"
#include "kdpc/experiments.hpp"
#include "kdpc/predictor.hpp"

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace kdpc {

struct CollectSummary {
  Eigen::Index columns = 0;
  std::size_t trajectories = 0;
  double lambda_min = 0.0;
  double bandwidth_past = 0.0;
  bool pe_warning = false;
  std::string dataset_hash;
};

struct FitSummary {
  FitReport report;
  ValidationReport training;
  ValidationReport validation;
  std::string predictors_hash;
};

struct ControllerSummary {
  ControllerKind kind = ControllerKind::kdpc;
  Metrics metrics;
  // Mean |y - y_ref| over the last 3 s before the first disturbance ends.
  double disturbed_error = 0.0;
  // Max |y - y_ref| over the final 2 s.
  double final_error = 0.0;
  bool diverged = false;
};

struct ScenarioSummary {
  std::string name;
  std::vector<ControllerSummary> controllers;
};

struct RunSummary {
  std::vector<ScenarioSummary> scenarios;
  bool diverged = false;
};

/// Simulates the excitation runs, checks persistency of excitation and writes
/// the dataset plus a manifest to `out_dir`. lambda_min(K_pp) <= 0 raises
/// ErrorCode::pe_failure; values under the warning threshold are reported.
CollectSummary run_collect(const RunConfig& cfg, const std::filesystem::path& out_dir,
                           std::ostream& log);

/// Fits both predictors, scores them on training and fresh windows and
/// writes artifacts plus a manifest to `out_dir`.
FitSummary run_fit(const RunConfig& cfg, const std::filesystem::path& dataset_dir,
                   const std::filesystem::path& out_dir, std::ostream& log);

/// Runs every scenario and writes per-controller CSVs, metrics.json, SVG
/// plots and a manifest to `out_dir`.
RunSummary run_scenarios(const RunConfig& cfg, const std::filesystem::path& predictors_dir,
                         const std::filesystem::path& out_dir, bool parallel, std::ostream& log);

/// collect, fit and run into out_dir/{dataset,predictors,results}.
RunSummary run_all(const RunConfig& cfg, const std::filesystem::path& out_dir, bool parallel,
                   std::ostream& log);

/// Per-scenario closed-loop evaluation without touching the filesystem.
std::vector<std::pair<ExperimentResult, ScenarioSummary>> evaluate_scenarios(
    const RunConfig& cfg, std::shared_ptr<const Predictors> predictors, bool parallel);

}  // namespace kdpc
