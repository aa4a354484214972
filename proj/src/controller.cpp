#include "kdpc/controller.hpp"

#include "kdpc/error.hpp"

#include <cmath>
#include <string>

namespace kdpc {

void ControllerConfig::validate() const {
  require(t_ini > 0 && n_horizon > 0, ErrorCode::invalid_argument,
          "t_ini and n_horizon must be positive");
  require(q > 0.0 && r > 0.0 && lambda_y > 0.0, ErrorCode::invalid_argument,
          "weights q, r and lambda_y must be positive");
  require(sigma_bar > 0.0, ErrorCode::invalid_argument, "sigma_bar must be positive");
  require(du_min < 0.0 && du_max > 0.0, ErrorCode::invalid_argument,
          "increment bounds need du_min < 0 < du_max");
  require(y_min < y_max, ErrorCode::invalid_argument, "output bounds need y_min < y_max");
}

std::string_view to_string(StepStatus s) {
  switch (s) {
    case StepStatus::warmup:
      return "warmup";
    case StepStatus::optimal:
      return "optimal";
    case StepStatus::infeasible:
      return "infeasible";
    case StepStatus::max_iter:
      return "max_iter";
  }
  return "unknown";
}

Eigen::VectorXd build_z_ini(const ControllerState& state, Eigen::Index t_ini) {
  require(static_cast<Eigen::Index>(state.buffer.size()) == t_ini, ErrorCode::not_warm,
          "measurement buffer holds " + std::to_string(state.buffer.size()) + " of " +
              std::to_string(t_ini) + " samples");
  Eigen::VectorXd z(2 * t_ini);
  for (Eigen::Index i = 0; i < t_ini; ++i) {
    const auto& [du, y] = state.buffer[static_cast<std::size_t>(i)];
    z(i) = du;
    z(t_ini + i) = y;
  }
  return z;
}

namespace {

StepStatus from_qp(QPStatus s) {
  switch (s) {
    case QPStatus::optimal:
      return StepStatus::optimal;
    case QPStatus::infeasible:
      return StepStatus::infeasible;
    case QPStatus::max_iter:
      return StepStatus::max_iter;
  }
  return StepStatus::max_iter;
}

}  // namespace

KdpcController::KdpcController(std::shared_ptr<const Predictors> predictors, ControllerConfig cfg,
                               QPSettings qp, double u_init)
    : pred_(std::move(predictors)), cfg_(cfg), solver_(qp) {
  require(pred_ != nullptr, ErrorCode::invalid_argument, "controller needs predictors");
  cfg_.validate();
  pred_->validate();
  require(pred_->t_ini == cfg_.t_ini && pred_->n_horizon == cfg_.n_horizon,
          ErrorCode::dimension_mismatch, "predictors were fitted for different t_ini / N");
  require(std::isfinite(u_init), ErrorCode::invalid_argument, "initial input must be finite");
  state_.u_prev = u_init;
}

QPProblem KdpcController::build_qp(const Eigen::VectorXd& k_p_ini,
                                   const Eigen::VectorXd& y_ref) const {
  const Eigen::Index n = cfg_.n_horizon;
  require(y_ref.size() == n, ErrorCode::dimension_mismatch, "reference must have N entries");
  const Eigen::VectorXd free = pred_->p1 * k_p_ini;

  // y_hat = free + M z with M = [P2, I].
  Eigen::MatrixXd m(n, 2 * n);
  m << pred_->p2, Eigen::MatrixXd::Identity(n, n);
  const Eigen::VectorXd e = free - y_ref;

  QPProblem p;
  p.h = 2.0 * cfg_.q * m.transpose() * m;
  p.h.diagonal().head(n).array() += 2.0 * cfg_.r;
  p.h.diagonal().tail(n).array() += 2.0 * cfg_.lambda_y;
  p.h = 0.5 * (p.h + p.h.transpose()).eval();
  p.g = 2.0 * cfg_.q * m.transpose() * e;
  p.lb.resize(2 * n);
  p.ub.resize(2 * n);
  p.lb << Eigen::VectorXd::Constant(n, cfg_.du_min), Eigen::VectorXd::Constant(n, -cfg_.sigma_bar);
  p.ub << Eigen::VectorXd::Constant(n, cfg_.du_max), Eigen::VectorXd::Constant(n, cfg_.sigma_bar);
  p.a_ineq.resize(2 * n, 2 * n);
  p.a_ineq << m, -m;
  p.b_ineq.resize(2 * n);
  p.b_ineq << Eigen::VectorXd::Constant(n, cfg_.y_max) - free,
      free - Eigen::VectorXd::Constant(n, cfg_.y_min);
  return p;
}

StepRecord KdpcController::step(double y_k, const Eigen::VectorXd& y_ref) {
  require(std::isfinite(y_k), ErrorCode::invalid_argument, "measurement must be finite");
  const Eigen::Index n = cfg_.n_horizon;
  require(y_ref.size() == n, ErrorCode::dimension_mismatch, "reference must have N entries");

  state_.buffer.emplace_back(last_du_, y_k);
  while (static_cast<Eigen::Index>(state_.buffer.size()) > cfg_.t_ini) state_.buffer.pop_front();

  StepRecord rec;
  rec.predicted_y = Eigen::VectorXd::Constant(n, y_k);
  double du = 0.0;
  if (static_cast<Eigen::Index>(state_.buffer.size()) == cfg_.t_ini) {
    const Eigen::VectorXd k_p = past_similarity(*pred_, build_z_ini(state_, cfg_.t_ini));
    const QPProblem qp = build_qp(k_p, y_ref);
    const QPSolution sol = solver_.solve(qp);
    rec.status = from_qp(sol.status);
    rec.kkt_residual = sol.kkt_residual;
    rec.qp_iterations = sol.iterations;
    if (sol.status == QPStatus::optimal) {
      du = sol.z(0);
      const Eigen::VectorXd free = pred_->p1 * k_p;
      rec.predicted_y = free + pred_->p2 * sol.z.head(n) + sol.z.tail(n);
      // Add back the constant dropped from the QP objective.
      rec.optimal_cost = sol.objective + cfg_.q * (free - y_ref).squaredNorm();
      rec.slack_norm = sol.z.tail(n).lpNorm<Eigen::Infinity>();
    } else {
      rec.predicted_y = pred_->p1 * k_p;
    }
  }
  last_du_ = du;
  state_.u_prev += du;
  rec.delta_u_first = du;
  rec.u_applied = state_.u_prev;
  return rec;
}

}  // namespace kdpc
