#pragma once

#include "kdpc/plant.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace kdpc {

/// Windowed offline data. Column i holds one window:
///   d_ini.col(i) = [du_ini; y_ini]  (past increments then past outputs)
///   d_f_u.col(i) = future increments
///   y_f.col(i)   = future outputs
struct Dataset {
  Eigen::MatrixXd d_ini;
  Eigen::MatrixXd d_f_u;
  Eigen::MatrixXd y_f;
  Eigen::Index t_ini = 0;
  Eigen::Index n_horizon = 0;

  Eigen::Index num_columns() const { return d_ini.cols(); }
  void validate() const;
  /// True for windows recorded at an equilibrium: zero increments and one
  /// constant output value throughout.
  bool is_equilibrium_column(Eigen::Index i) const;
};

/// Piecewise-constant uniform random signal.
struct ExcitationConfig {
  std::size_t length = 0;
  double amplitude = 1.0;
  std::size_t hold_steps = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Values drawn uniformly from [-amplitude, amplitude], each held for
/// hold_steps samples. Deterministic in the seed.
std::vector<double> generate_excitation(const ExcitationConfig& cfg);

enum class ExcitationMode {
  // Each run starts at a random state and drives the input as a random walk
  // whose increments come from generate_excitation.
  increment_walk,
  // Each run starts at rest and applies generate_excitation as absolute input
  // levels.
  level,
};

struct CollectionConfig {
  ExcitationMode mode = ExcitationMode::increment_walk;
  std::size_t runs = 3000;
  // 0 selects the minimum t_ini + n_horizon + 1, i.e. one window per run.
  std::size_t run_length = 0;
  double amplitude = 0.4;
  std::size_t hold_steps = 1;
  // Initial conditions of increment_walk runs: x1 ~ U[x1_min, x1_max],
  // x2 ~ U[-x2_spread, x2_spread], u(-1) ~ x1 + U[-input_spread, input_spread].
  double x1_min = -0.5;
  double x1_max = 1.5;
  double x2_spread = 0.5;
  double input_spread = 1.0;
  // Fraction of increment_walk runs that start at an equilibrium (x2 = 0,
  // u(-1) = x1).
  double equilibrium_fraction = 0.3;
  // Leading runs held at these equilibrium outputs with zero increments. The
  // level 0 is the rest trajectory.
  std::vector<double> equilibrium_levels{-0.5, 0.0, 0.5, 1.0, 1.5};
  std::size_t stride = 1;

  void validate() const;
};

/// Runs the plant under the configured excitation: first one run per
/// equilibrium level, then `runs` excited runs. Excited run r uses a seed
/// derived from (seed, r) so the result does not depend on evaluation order.
std::vector<Trajectory> collect_trajectories(const CollectionConfig& cfg, const VdpParams& plant,
                                             Eigen::Index t_ini, Eigen::Index n_horizon,
                                             std::uint64_t seed);

/// Slides a window over each trajectory. The window with start s uses
/// du[s..s+t_ini-1] and y[s..s+t_ini-1] as the past and the following
/// n_horizon samples as the future, with du[s] = u[s] - u[s-1]. Every
/// trajectory of length L contributes (L - t_ini - n_horizon) / stride
/// columns (rounded up). Columns are ordered by trajectory, then start.
Dataset assemble_dataset(std::span<const Trajectory> trajectories, Eigen::Index t_ini,
                         Eigen::Index n_horizon, std::size_t stride = 1);

/// Smallest eigenvalue of a symmetric matrix.
double check_pe(const Eigen::MatrixXd& k_pp);

}  // namespace kdpc
