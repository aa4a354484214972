#include "kdpc/controller.hpp"

#include "kdpc/error.hpp"

#include <cmath>
#include <limits>

namespace kdpc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Rollout {
  Eigen::VectorXd y;  // x1 after each input
  Eigen::MatrixXd g;  // d y_k / d u_j
};

Rollout linearize(const PlantState& x0, const Eigen::VectorXd& u, const VdpParams& m) {
  const Eigen::Index n = u.size();
  Rollout out;
  out.y.resize(n);
  out.g = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd sens = Eigen::MatrixXd::Zero(2, n);  // d x_k / d u
  PlantState x = x0;
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Matrix2d a;
    a << 1.0, m.ts, -m.ts - 2.0 * m.ts * m.mu_vdp * x.x1 * x.x2,
        1.0 + m.ts * m.mu_vdp * (1.0 - x.x1 * x.x1);
    sens = (a * sens).eval();
    sens(1, k) += m.ts;
    x = vdp_step(x, u(k), 0.0, m);
    out.y(k) = x.x1;
    out.g.row(k) = sens.row(0);
  }
  return out;
}

}  // namespace

NmpcController::NmpcController(VdpParams model, ControllerConfig cfg, QPSettings qp,
                               double u_init, int max_linearizations)
    : model_(model), cfg_(cfg), solver_(qp), u_prev_(u_init), max_lin_(max_linearizations) {
  model_.validate();
  cfg_.validate();
  require(max_lin_ >= 1, ErrorCode::invalid_argument, "need at least one linearisation");
  u_plan_ = Eigen::VectorXd::Constant(cfg_.n_horizon, u_init);
}

StepRecord NmpcController::step(const PlantState& x, const Eigen::VectorXd& y_ref) {
  const Eigen::Index n = cfg_.n_horizon;
  require(y_ref.size() == n, ErrorCode::dimension_mismatch, "reference must have N entries");

  // Shift the previous plan as the first linearisation trajectory.
  Eigen::VectorXd ubar(n);
  ubar.head(n - 1) = u_plan_.tail(n - 1);
  ubar(n - 1) = u_plan_(n - 1);

  // Increment rows: D u <= du_max + e0 u_prev and -D u <= -du_min - e0 u_prev.
  Eigen::MatrixXd d = Eigen::MatrixXd::Identity(n, n);
  d.diagonal(-1).setConstant(-1.0);
  Eigen::VectorXd e0 = Eigen::VectorXd::Zero(n);
  e0(0) = u_prev_;

  StepRecord rec;
  QPSolution sol;
  Rollout lin;
  for (int it = 0; it < max_lin_; ++it) {
    lin = linearize(x, ubar, model_);
    const Eigen::VectorXd y_aff = lin.y - lin.g * ubar;  // y ~ y_aff + G u
    QPProblem p;
    p.h = 2.0 * (cfg_.q * lin.g.transpose() * lin.g +
                 cfg_.r * Eigen::MatrixXd::Identity(n, n));
    p.h = 0.5 * (p.h + p.h.transpose()).eval();
    // The model equilibrium input for output r is u = r.
    p.g = 2.0 * (cfg_.q * lin.g.transpose() * (y_aff - y_ref) - cfg_.r * y_ref);
    p.lb = Eigen::VectorXd::Constant(n, -kInf);
    p.ub = Eigen::VectorXd::Constant(n, kInf);
    p.a_ineq.resize(4 * n, n);
    p.a_ineq << d, -d, lin.g, -lin.g;
    p.b_ineq.resize(4 * n);
    p.b_ineq << Eigen::VectorXd::Constant(n, cfg_.du_max) + e0,
        Eigen::VectorXd::Constant(n, -cfg_.du_min) - e0,
        Eigen::VectorXd::Constant(n, cfg_.y_max) - y_aff,
        y_aff - Eigen::VectorXd::Constant(n, cfg_.y_min);
    sol = solver_.solve(p);
    rec.kkt_residual = sol.kkt_residual;
    rec.qp_iterations += sol.iterations;
    if (sol.status != QPStatus::optimal) break;
    const double change = (sol.z - ubar).lpNorm<Eigen::Infinity>();
    ubar = sol.z;
    rec.optimal_cost = sol.objective + cfg_.q * (y_aff - y_ref).squaredNorm() +
                       cfg_.r * y_ref.squaredNorm();
    if (change < 1e-9) break;
  }

  switch (sol.status) {
    case QPStatus::optimal:
      rec.status = StepStatus::optimal;
      break;
    case QPStatus::infeasible:
      rec.status = StepStatus::infeasible;
      break;
    case QPStatus::max_iter:
      rec.status = StepStatus::max_iter;
      break;
  }
  if (rec.status == StepStatus::optimal) {
    u_plan_ = ubar;
    rec.predicted_y = linearize(x, ubar, model_).y;
  } else {
    u_plan_.setConstant(u_prev_);
    rec.predicted_y = lin.y;
    rec.optimal_cost = 0.0;
  }
  rec.delta_u_first = u_plan_(0) - u_prev_;
  u_prev_ = u_plan_(0);
  rec.u_applied = u_prev_;
  return rec;
}

}  // namespace kdpc
