#include "kdpc/qp.hpp"

#include "kdpc/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <vector>

namespace kdpc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Stacked constraint view l <= C z <= u with C = [I; A].
struct Stacked {
  Eigen::MatrixXd c;
  Eigen::VectorXd l;
  Eigen::VectorXd u;
};

Stacked stack(const QPProblem& p) {
  const Eigen::Index n = p.num_vars();
  const Eigen::Index m = p.num_ineq();
  Stacked s;
  s.c.resize(n + m, n);
  s.c.topRows(n).setIdentity();
  if (m > 0) s.c.bottomRows(m) = p.a_ineq;
  s.l.resize(n + m);
  s.u.resize(n + m);
  s.l.head(n) = p.lb;
  s.u.head(n) = p.ub;
  s.l.tail(m).setConstant(-kInf);
  s.u.tail(m) = p.b_ineq;
  return s;
}

bool is_equality(double l, double u) { return std::isfinite(l) && l == u; }

Eigen::VectorXd clip(const Eigen::VectorXd& v, const Eigen::VectorXd& l, const Eigen::VectorXd& u) {
  return v.cwiseMax(l).cwiseMin(u);
}

// ADMM iteration state for a fixed problem.
class Admm {
 public:
  Admm(const QPProblem& p, const Stacked& s, const QPSettings& cfg)
      : p_(p), s_(s), cfg_(cfg), n_(p.num_vars()), m_(s.c.rows()) {
    rho_base_ = cfg.rho;
    set_rho(rho_base_);
    x_ = Eigen::VectorXd::Zero(n_);
    z_ = clip(s_.c * x_, s_.l, s_.u);
    y_ = Eigen::VectorXd::Zero(m_);
  }

  void warm(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    x_ = x;
    z_ = clip(s_.c * x_, s_.l, s_.u);
    y_ = y;
  }

  void iterate() {
    const Eigen::VectorXd rhs =
        cfg_.sigma * x_ - p_.g + s_.c.transpose() * (rho_.cwiseProduct(z_) - y_);
    const Eigen::VectorXd xt = llt_.solve(rhs);
    const Eigen::VectorXd zt = s_.c * xt;
    const Eigen::VectorXd x_next = cfg_.alpha * xt + (1.0 - cfg_.alpha) * x_;
    const Eigen::VectorXd z_relax = cfg_.alpha * zt + (1.0 - cfg_.alpha) * z_;
    const Eigen::VectorXd z_next =
        clip(z_relax + y_.cwiseQuotient(rho_), s_.l, s_.u);
    const Eigen::VectorXd y_next = y_ + rho_.cwiseProduct(z_relax - z_next);
    delta_y_ = y_next - y_;
    x_ = x_next;
    z_ = z_next;
    y_ = y_next;
  }

  double primal_residual() const { return (s_.c * x_ - z_).lpNorm<Eigen::Infinity>(); }
  double dual_residual() const {
    return (p_.h * x_ + p_.g + s_.c.transpose() * y_).lpNorm<Eigen::Infinity>();
  }
  double primal_scale() const {
    return std::max((s_.c * x_).lpNorm<Eigen::Infinity>(), z_.lpNorm<Eigen::Infinity>());
  }
  double dual_scale() const {
    return std::max({(p_.h * x_).lpNorm<Eigen::Infinity>(),
                     (s_.c.transpose() * y_).lpNorm<Eigen::Infinity>(),
                     p_.g.lpNorm<Eigen::Infinity>()});
  }

  void adapt_rho() {
    const double rp = primal_residual() / std::max(primal_scale(), 1e-12);
    const double rd = dual_residual() / std::max(dual_scale(), 1e-12);
    if (rp <= 0.0 || rd <= 0.0) return;
    double next = rho_base_ * std::sqrt(rp / rd);
    next = std::clamp(next, 1e-6, 1e6);
    if (next > 5.0 * rho_base_ || next < 0.2 * rho_base_) {
      rho_base_ = next;
      set_rho(rho_base_);
    }
  }

  // Certificate of primal infeasibility from the last dual increment.
  bool primal_infeasible(double eps, double* residual) const {
    const double norm = delta_y_.lpNorm<Eigen::Infinity>();
    if (norm < 1e-12) return false;
    const Eigen::VectorXd dy = delta_y_ / norm;
    const double ctdy = (s_.c.transpose() * dy).lpNorm<Eigen::Infinity>();
    double support = 0.0;
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (dy(i) > 0.0) {
        if (!std::isfinite(s_.u(i))) {
          if (dy(i) > eps) return false;
          continue;
        }
        support += s_.u(i) * dy(i);
      } else if (dy(i) < 0.0) {
        if (!std::isfinite(s_.l(i))) {
          if (-dy(i) > eps) return false;
          continue;
        }
        support += s_.l(i) * dy(i);
      }
    }
    if (ctdy <= eps && support < -eps) {
      *residual = ctdy;
      return true;
    }
    return false;
  }

  const Eigen::VectorXd& x() const { return x_; }
  const Eigen::VectorXd& z() const { return z_; }
  const Eigen::VectorXd& y() const { return y_; }

 private:
  void set_rho(double rho) {
    rho_.resize(m_);
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (is_equality(s_.l(i), s_.u(i))) {
        rho_(i) = 1e3 * rho;
      } else if (!std::isfinite(s_.l(i)) && !std::isfinite(s_.u(i))) {
        rho_(i) = 1e-6;
      } else {
        rho_(i) = rho;
      }
    }
    Eigen::MatrixXd k = p_.h;
    k.diagonal().array() += cfg_.sigma;
    k.noalias() += s_.c.transpose() * rho_.asDiagonal() * s_.c;
    llt_.compute(k);
    if (llt_.info() != Eigen::Success) {
      fail(ErrorCode::invalid_argument, "QP Hessian is not positive definite");
    }
  }

  const QPProblem& p_;
  const Stacked& s_;
  const QPSettings& cfg_;
  Eigen::Index n_;
  Eigen::Index m_;
  double rho_base_ = 0.1;
  Eigen::VectorXd rho_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd x_, z_, y_, delta_y_;
};

// Primal-dual active-set refinement. Starting from a guessed working set it
// repeatedly solves the equality-constrained KKT system and swaps violated
// constraints in or out. Returns true when a point with the correct signs and
// feasibility is reached.
bool polish(const QPProblem& p, const Stacked& s, const Eigen::VectorXd& z_guess,
            const Eigen::VectorXd& y_guess, double tol, Eigen::VectorXd* x_out,
            Eigen::VectorXd* y_out) {
  const Eigen::Index n = p.num_vars();
  const Eigen::Index m = s.c.rows();
  // -1 lower active, +1 upper active, 0 inactive; equalities are always +1.
  std::vector<int> state(static_cast<std::size_t>(m), 0);
  for (Eigen::Index i = 0; i < m; ++i) {
    auto& st = state[static_cast<std::size_t>(i)];
    if (is_equality(s.l(i), s.u(i))) {
      st = 1;
    } else if (std::isfinite(s.l(i)) && z_guess(i) - s.l(i) < -y_guess(i)) {
      st = -1;
    } else if (std::isfinite(s.u(i)) && s.u(i) - z_guess(i) < y_guess(i)) {
      st = 1;
    }
  }

  std::set<std::vector<int>> visited;
  for (int round = 0; round < 50; ++round) {
    if (!visited.insert(state).second) return false;

    std::vector<Eigen::Index> act;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (state[static_cast<std::size_t>(i)] != 0) act.push_back(i);
    }
    const auto na = static_cast<Eigen::Index>(act.size());
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + na, n + na);
    Eigen::VectorXd rhs(n + na);
    kkt.topLeftCorner(n, n) = p.h;
    rhs.head(n) = -p.g;
    for (Eigen::Index r = 0; r < na; ++r) {
      const Eigen::Index i = act[static_cast<std::size_t>(r)];
      kkt.block(n + r, 0, 1, n) = s.c.row(i);
      kkt.block(0, n + r, n, 1) = s.c.row(i).transpose();
      rhs(n + r) = state[static_cast<std::size_t>(i)] > 0 ? s.u(i) : s.l(i);
    }
    // Small regularisation keeps degenerate (dependent) working sets
    // solvable; iterative refinement against the exact matrix removes its
    // bias.
    const double delta = 1e-11 * (1.0 + p.h.lpNorm<Eigen::Infinity>());
    Eigen::MatrixXd reg = kkt;
    reg.topLeftCorner(n, n).diagonal().array() += delta;
    reg.bottomRightCorner(na, na).diagonal().array() -= delta;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(reg);
    Eigen::VectorXd sol = lu.solve(rhs);
    for (int it = 0; it < 5; ++it) {
      sol += lu.solve(rhs - kkt * sol);
    }
    if (!sol.allFinite()) return false;

    const Eigen::VectorXd x = sol.head(n);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(m);
    for (Eigen::Index r = 0; r < na; ++r) y(act[static_cast<std::size_t>(r)]) = sol(n + r);

    const Eigen::VectorXd cx = s.c * x;
    bool changed = false;
    for (Eigen::Index i = 0; i < m; ++i) {
      auto& st = state[static_cast<std::size_t>(i)];
      if (is_equality(s.l(i), s.u(i))) continue;
      const double feas_tol = tol * (1.0 + std::abs(cx(i)));
      if (st == 0) {
        if (cx(i) > s.u(i) + feas_tol) {
          st = 1;
          changed = true;
        } else if (cx(i) < s.l(i) - feas_tol) {
          st = -1;
          changed = true;
        }
      } else if ((st > 0 && y(i) < 0.0) || (st < 0 && y(i) > 0.0)) {
        const double dual_tol = tol * (1.0 + std::abs(y(i)));
        if (std::abs(y(i)) > dual_tol) {
          st = 0;
          changed = true;
        } else {
          y(i) = 0.0;
        }
      }
    }
    if (!changed) {
      *x_out = x;
      *y_out = y;
      return true;
    }
  }
  return false;
}

}  // namespace

double QPProblem::objective(const Eigen::VectorXd& z) const {
  return 0.5 * z.dot(h * z) + g.dot(z);
}

void QPProblem::validate() const {
  const Eigen::Index n = num_vars();
  require(n > 0, ErrorCode::invalid_argument, "QP has no variables");
  require(h.rows() == n && h.cols() == n, ErrorCode::dimension_mismatch, "QP: H must be n x n");
  require(lb.size() == n && ub.size() == n, ErrorCode::dimension_mismatch,
          "QP: bounds must have n entries");
  require(a_ineq.rows() == b_ineq.size() && (a_ineq.rows() == 0 || a_ineq.cols() == n),
          ErrorCode::dimension_mismatch, "QP: A must be m x n and b must have m entries");
  require(h.allFinite() && g.allFinite() && a_ineq.allFinite(), ErrorCode::invalid_argument,
          "QP data must be finite");
  const double asym = (h - h.transpose()).lpNorm<Eigen::Infinity>();
  require(asym <= 1e-9 * (1.0 + h.lpNorm<Eigen::Infinity>()), ErrorCode::invalid_argument,
          "QP: H must be symmetric");
  for (Eigen::Index i = 0; i < n; ++i) {
    require(!std::isnan(lb(i)) && !std::isnan(ub(i)) && lb(i) <= ub(i),
            ErrorCode::invalid_argument, "QP: lb <= ub violated");
  }
  for (Eigen::Index i = 0; i < b_ineq.size(); ++i) {
    require(!std::isnan(b_ineq(i)), ErrorCode::invalid_argument, "QP: b must not be NaN");
  }
}

QPProblem QPProblem::unconstrained(Eigen::MatrixXd h, Eigen::VectorXd g) {
  QPProblem p;
  const Eigen::Index n = g.size();
  p.h = std::move(h);
  p.g = std::move(g);
  p.a_ineq.resize(0, n);
  p.b_ineq.resize(0);
  p.lb = Eigen::VectorXd::Constant(n, -kInf);
  p.ub = Eigen::VectorXd::Constant(n, kInf);
  return p;
}

std::string_view to_string(QPStatus s) {
  switch (s) {
    case QPStatus::optimal:
      return "optimal";
    case QPStatus::infeasible:
      return "infeasible";
    case QPStatus::max_iter:
      return "max_iter";
  }
  return "unknown";
}

QPSolver::QPSolver(QPSettings settings) : settings_(settings) {
  require(settings_.tol > 0.0 && settings_.max_iter > 0, ErrorCode::invalid_argument,
          "QP settings need tol > 0 and max_iter > 0");
}

void QPSolver::warm_start(const QPSolution& previous) { warm_ = previous; }

void QPSolver::clear_warm_start() { warm_.reset(); }

QPSolution QPSolver::solve(const QPProblem& p) {
  p.validate();
  require(Eigen::LLT<Eigen::MatrixXd>(p.h).info() == Eigen::Success, ErrorCode::invalid_argument,
          "QP Hessian is not positive definite");
  const Eigen::Index n = p.num_vars();
  const Eigen::Index mi = p.num_ineq();
  const Stacked s = stack(p);
  Admm admm(p, s, settings_);

  if (warm_ && warm_->z.size() == n && warm_->dual_box.size() == n &&
      warm_->dual_ineq.size() == mi) {
    Eigen::VectorXd y(n + mi);
    y << warm_->dual_box, warm_->dual_ineq;
    admm.warm(warm_->z, y);
  }

  const double tol = settings_.tol;
  // Polishing is attempted once ADMM is in the right neighbourhood.
  const double loose = std::max(1e-4, std::sqrt(tol));

  QPSolution sol;
  auto finish = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& y, std::size_t iters,
                    bool polished) {
    sol.z = x;
    sol.dual_box = y.head(n);
    sol.dual_ineq = y.tail(mi);
    sol.objective = p.objective(x);
    sol.iterations = iters;
    sol.polished = polished;
    sol.kkt_residual = check_kkt(p, sol.z, sol.dual_box, sol.dual_ineq).max();
  };

  auto try_polish = [&](std::size_t iters) {
    if (!settings_.polish) return false;
    Eigen::VectorXd x, y;
    if (!polish(p, s, admm.z(), admm.y(), tol, &x, &y)) return false;
    finish(x, y, iters, true);
    if (sol.kkt_residual <= tol) {
      sol.status = QPStatus::optimal;
      return true;
    }
    return false;
  };

  // A warm start is often already at the optimal active set.
  if (warm_ && try_polish(0)) {
    warm_start(sol);
    return sol;
  }

  const std::size_t check = std::max<std::size_t>(1, settings_.check_every);
  for (std::size_t it = 1; it <= settings_.max_iter; ++it) {
    admm.iterate();
    if (it % check != 0 && it != settings_.max_iter) continue;

    const double rp = admm.primal_residual();
    const double rd = admm.dual_residual();
    const double eps_p = tol * (1.0 + admm.primal_scale());
    const double eps_d = tol * (1.0 + admm.dual_scale());

    double cert = 0.0;
    if (admm.primal_infeasible(settings_.infeasibility_tol, &cert)) {
      finish(admm.x(), admm.y(), it, false);
      sol.status = QPStatus::infeasible;
      sol.certificate_residual = cert;
      clear_warm_start();
      return sol;
    }

    const bool near = rp <= loose * (1.0 + admm.primal_scale()) &&
                      rd <= loose * (1.0 + admm.dual_scale());
    if ((near || it % 200 == 0) && try_polish(it)) {
      warm_start(sol);
      return sol;
    }
    if (rp <= eps_p && rd <= eps_d) {
      finish(admm.x(), admm.y(), it, false);
      if (sol.kkt_residual <= tol) {
        sol.status = QPStatus::optimal;
        warm_start(sol);
        return sol;
      }
    }
    if (settings_.adaptive_rho && it % (5 * check) == 0) admm.adapt_rho();
  }

  finish(admm.x(), admm.y(), settings_.max_iter, false);
  sol.status = QPStatus::max_iter;
  clear_warm_start();
  return sol;
}

QPSolution solve_qp(const QPProblem& problem, double tol, std::size_t max_iter) {
  QPSettings cfg;
  cfg.tol = tol;
  cfg.max_iter = max_iter;
  return QPSolver(cfg).solve(problem);
}

}  // namespace kdpc
