#pragma once

#include "kdpc/plant.hpp"
#include "kdpc/predictor.hpp"
#include "kdpc/qp.hpp"

#include <Eigen/Dense>

#include <deque>
#include <memory>
#include <string_view>
#include <utility>

namespace kdpc {

struct ControllerConfig {
  Eigen::Index t_ini = 10;
  Eigen::Index n_horizon = 15;
  double q = 100.0;  // output tracking weight
  double r = 10.0;   // input weight (increments for KDPC)
  double lambda_y = 1e4;
  double sigma_bar = 0.5;
  double du_min = -0.4;
  double du_max = 0.4;
  double y_min = -5.0;
  double y_max = 5.0;

  void validate() const;
};

enum class StepStatus {
  warmup,      // buffer not yet full; zero increment applied
  optimal,
  infeasible,  // hold-input fallback
  max_iter,    // hold-input fallback
};

std::string_view to_string(StepStatus s);

struct StepRecord {
  double u_applied = 0.0;
  double delta_u_first = 0.0;
  Eigen::VectorXd predicted_y;
  double optimal_cost = 0.0;
  StepStatus status = StepStatus::warmup;
  double slack_norm = 0.0;
  double kkt_residual = 0.0;
  std::size_t qp_iterations = 0;
};

/// u(k-1) and the last t_ini (du(k-1), y(k)) pairs, oldest first.
struct ControllerState {
  double u_prev = 0.0;
  std::deque<std::pair<double, double>> buffer;
};

/// Stacks the buffer as [du_ini; y_ini], matching the dataset column layout.
/// Throws ErrorCode::not_warm until the buffer holds t_ini pairs.
Eigen::VectorXd build_z_ini(const ControllerState& state, Eigen::Index t_ini);

/// Receding-horizon controller over input increments using the kernel
/// predictor.
class KdpcController {
 public:
  KdpcController(std::shared_ptr<const Predictors> predictors, ControllerConfig cfg, QPSettings qp = {},
                 double u_init = 0.0);

  /// Pushes (previous increment, y_k), solves the horizon QP once warm and
  /// returns the input to apply now. `y_ref` holds the reference for the
  /// next n_horizon samples.
  StepRecord step(double y_k, const Eigen::VectorXd& y_ref);

  /// QP assembled for the given past-window similarity vector and reference.
  /// Decision vector is [du (N); slack (N)].
  QPProblem build_qp(const Eigen::VectorXd& k_p_ini, const Eigen::VectorXd& y_ref) const;

  const ControllerState& state() const { return state_; }
  const ControllerConfig& config() const { return cfg_; }

 private:
  std::shared_ptr<const Predictors> pred_;
  ControllerConfig cfg_;
  QPSolver solver_;
  ControllerState state_;
  double last_du_ = 0.0;
};

/// Successive-linearisation MPC on the exact model, in absolute inputs,
/// using the true state and no disturbance model. The input cost penalises
/// the distance to the model equilibrium input for the reference.
class NmpcController {
 public:
  NmpcController(VdpParams model, ControllerConfig cfg, QPSettings qp = {}, double u_init = 0.0,
                 int max_linearizations = 3);

  StepRecord step(const PlantState& x, const Eigen::VectorXd& y_ref);

  double u_prev() const { return u_prev_; }

 private:
  VdpParams model_;
  ControllerConfig cfg_;
  QPSolver solver_;
  double u_prev_;
  int max_lin_;
  Eigen::VectorXd u_plan_;
};

}  // namespace kdpc
