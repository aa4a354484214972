#include "kdpc/qp.hpp"

#include "kdpc/error.hpp"

#include <algorithm>
#include <cmath>

namespace kdpc {

double KktReport::max() const {
  return std::max({stationarity, primal, dual_sign, complementarity});
}

namespace {

double finite_abs(double v) { return std::isfinite(v) ? std::abs(v) : 0.0; }

}  // namespace

KktReport check_kkt(const QPProblem& p, const Eigen::VectorXd& z,
                    const Eigen::VectorXd& dual_box, const Eigen::VectorXd& dual_ineq) {
  const Eigen::Index n = p.num_vars();
  const Eigen::Index m = p.num_ineq();
  require(z.size() == n && dual_box.size() == n && dual_ineq.size() == m,
          ErrorCode::dimension_mismatch, "KKT check: dimension mismatch");

  KktReport r;

  // grad L = Hz + g + dual_box + A' dual_ineq
  const Eigen::VectorXd hz = p.h * z;
  Eigen::VectorXd grad = hz + p.g + dual_box;
  double grad_scale = std::max({hz.lpNorm<Eigen::Infinity>(), p.g.lpNorm<Eigen::Infinity>(),
                                dual_box.lpNorm<Eigen::Infinity>()});
  if (m > 0) {
    const Eigen::VectorXd aty = p.a_ineq.transpose() * dual_ineq;
    grad += aty;
    grad_scale = std::max(grad_scale, aty.lpNorm<Eigen::Infinity>());
  }
  r.stationarity = grad.lpNorm<Eigen::Infinity>() / (1.0 + grad_scale);

  for (Eigen::Index i = 0; i < n; ++i) {
    const double scale = 1.0 + std::max({std::abs(z(i)), finite_abs(p.lb(i)), finite_abs(p.ub(i))});
    const double viol = std::max({0.0, p.lb(i) - z(i), z(i) - p.ub(i)});
    r.primal = std::max(r.primal, viol / scale);

    const double y = dual_box(i);
    const double ydual_scale = 1.0 + std::abs(y);
    if (y > 0.0) {
      if (!std::isfinite(p.ub(i))) {
        r.dual_sign = std::max(r.dual_sign, y / ydual_scale);
      } else {
        r.complementarity =
            std::max(r.complementarity, y * std::abs(p.ub(i) - z(i)) / (ydual_scale * scale));
      }
    } else if (y < 0.0) {
      if (!std::isfinite(p.lb(i))) {
        r.dual_sign = std::max(r.dual_sign, -y / ydual_scale);
      } else {
        r.complementarity =
            std::max(r.complementarity, -y * std::abs(z(i) - p.lb(i)) / (ydual_scale * scale));
      }
    }
  }

  if (m > 0) {
    const Eigen::VectorXd az = p.a_ineq * z;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double scale = 1.0 + std::max(std::abs(az(i)), finite_abs(p.b_ineq(i)));
      r.primal = std::max(r.primal, std::max(0.0, az(i) - p.b_ineq(i)) / scale);
      const double y = dual_ineq(i);
      r.dual_sign = std::max(r.dual_sign, std::max(0.0, -y) / (1.0 + std::abs(y)));
      if (y > 0.0 && std::isfinite(p.b_ineq(i))) {
        r.complementarity = std::max(
            r.complementarity, y * std::abs(p.b_ineq(i) - az(i)) / ((1.0 + y) * scale));
      }
    }
  }
  return r;
}

}  // namespace kdpc
