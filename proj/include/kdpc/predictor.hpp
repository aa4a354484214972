#pragma once

#include "kdpc/data.hpp"
#include "kdpc/kernel.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace kdpc {

/// Fitted linear-in-increments output predictor
///   y_hat = p1 * k_past(z_ini) + p2 * du.
struct Predictors {
  Eigen::MatrixXd p1;           // N x T
  Eigen::MatrixXd p2;           // N x N
  Eigen::MatrixXd past_points;  // dataset d_ini, needed to evaluate k_past online
  double lambda_reg = 1e-3;
  double mu_reg = 1e-3;
  KernelSpec kernel_past;
  KernelSpec kernel_future;
  Eigen::Index t_ini = 0;
  Eigen::Index n_horizon = 0;
  std::string dataset_hash;

  void validate() const;
};

/// Y_f (K + lambda I)^{-1} via Cholesky solves.
Eigen::MatrixXd fit_p1(const Eigen::MatrixXd& y_f, const Eigen::MatrixXd& k_pp, double lambda_reg);

/// As above with per-column regularisation K + lambda * diag(scale).
Eigen::MatrixXd fit_p1(const Eigen::MatrixXd& y_f, const Eigen::MatrixXd& k_pp, double lambda_reg,
                       const Eigen::VectorXd& scale);

/// (K + lambda I)^{-1} k_p_ini.
Eigen::VectorXd compute_alpha_p(const Eigen::MatrixXd& k_pp, double lambda_reg,
                                const Eigen::VectorXd& k_p_ini);

Eigen::VectorXd compute_alpha_p(const Eigen::MatrixXd& k_pp, double lambda_reg,
                                const Eigen::VectorXd& scale, const Eigen::VectorXd& k_p_ini);

/// Rows are the gradients at the origin of k(d_f_u.col(j), .).
Eigen::MatrixXd future_jacobian(const Eigen::MatrixXd& d_f_u, const KernelSpec& k);

/// Jacobian at du = 0 of du -> Y_f (K_ff + mu I)^{-1} k_future(du):
/// Y_f (K_ff + mu I)^{-1} J(0), an N x N matrix.
Eigen::MatrixXd fit_p2(const Eigen::MatrixXd& d_f_u, const Eigen::MatrixXd& k_ff, double mu_reg,
                       const Eigen::MatrixXd& y_f, const KernelSpec& k);

struct FitConfig {
  // A positive bandwidth is used as given; 0 selects median_heuristic times
  // the scale.
  double bandwidth_past = 0.0;
  double bandwidth_past_scale = 1.0;
  double bandwidth_future = 0.0;
  double bandwidth_future_scale = 10.0;
  double lambda_reg = 1e-3;
  double mu_reg = 1.0;
  // Equilibrium windows get regularisation lambda / equilibrium_weight so
  // that the fitted map reproduces those equilibria closely.
  double equilibrium_weight = 1e5;

  void validate() const;
};

struct FitReport {
  double lambda_min_past = 0.0;
  Eigen::Index equilibrium_columns = 0;
  // max |P1 (K + Lambda) - Y_f| / max |Y_f|
  double p1_residual = 0.0;
};

Predictors fit_predictors(const Dataset& data, const FitConfig& cfg, FitReport* report = nullptr);

/// Regularisation scale per column: 1, or 1 / equilibrium_weight for
/// equilibrium windows.
Eigen::VectorXd regularization_scale(const Dataset& data, const FitConfig& cfg);

/// k_past evaluated between the stored past windows and z_ini.
Eigen::VectorXd past_similarity(const Predictors& p, const Eigen::VectorXd& z_ini);

/// p1 * k_p_ini + p2 * du.
Eigen::VectorXd predict(const Predictors& p, const Eigen::VectorXd& k_p_ini,
                        const Eigen::VectorXd& du);

struct ValidationReport {
  Eigen::VectorXd rmse_per_step;  // one entry per horizon step
  double rmse = 0.0;
  Eigen::Index windows = 0;
};

/// Compares predictions with the true future outputs of every window in
/// `data`, feeding each window's own future increments.
ValidationReport open_loop_validate(const Predictors& p, const Dataset& data);

/// Fresh validation windows are collected with `cfg` and `seed`, then scored
/// as above.
ValidationReport open_loop_validate(const Predictors& p, const VdpParams& plant,
                                    const CollectionConfig& cfg, std::uint64_t seed);

}  // namespace kdpc
