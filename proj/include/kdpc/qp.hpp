#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <string_view>

namespace kdpc {

/// minimize 0.5 z'Hz + g'z  subject to  A z <= b,  lb <= z <= ub.
/// Bounds may be +-infinity; A may have zero rows.
struct QPProblem {
  Eigen::MatrixXd h;
  Eigen::VectorXd g;
  Eigen::MatrixXd a_ineq;
  Eigen::VectorXd b_ineq;
  Eigen::VectorXd lb;
  Eigen::VectorXd ub;

  Eigen::Index num_vars() const { return g.size(); }
  Eigen::Index num_ineq() const { return b_ineq.size(); }
  double objective(const Eigen::VectorXd& z) const;

  /// Checks dimensions, symmetry and lb <= ub. Strict convexity is checked by
  /// the solver when it factors H.
  void validate() const;

  /// Problem with no general inequalities and infinite bounds.
  static QPProblem unconstrained(Eigen::MatrixXd h, Eigen::VectorXd g);
};

enum class QPStatus { optimal, infeasible, max_iter };

std::string_view to_string(QPStatus s);

struct QPSolution {
  Eigen::VectorXd z;
  // Multipliers. dual_box(i) > 0 means the upper bound is active, < 0 the
  // lower bound. dual_ineq >= 0.
  Eigen::VectorXd dual_box;
  Eigen::VectorXd dual_ineq;
  double objective = 0.0;
  QPStatus status = QPStatus::max_iter;
  double kkt_residual = 0.0;
  // ||C' dy|| / ||dy|| of the infeasibility certificate, set when infeasible.
  double certificate_residual = 0.0;
  std::size_t iterations = 0;
  bool polished = false;
};

struct QPSettings {
  double tol = 1e-8;
  std::size_t max_iter = 20000;
  double rho = 0.1;
  double sigma = 1e-6;
  double alpha = 1.6;
  bool polish = true;
  bool adaptive_rho = true;
  std::size_t check_every = 10;
  double infeasibility_tol = 1e-7;
};

/// Dense ADMM (operator splitting) solver with active-set polishing.
/// Holds its own workspace; use one instance per thread.
class QPSolver {
 public:
  explicit QPSolver(QPSettings settings = {});

  QPSolution solve(const QPProblem& problem);

  /// Seeds the next solve with a previous primal-dual point. Ignored when the
  /// dimensions do not match the next problem.
  void warm_start(const QPSolution& previous);
  void clear_warm_start();

  const QPSettings& settings() const { return settings_; }

 private:
  QPSettings settings_;
  std::optional<QPSolution> warm_;
};

QPSolution solve_qp(const QPProblem& problem, double tol = 1e-8, std::size_t max_iter = 20000);

/// KKT conditions evaluated independently of the solver. Each component is
/// normalised by (1 + magnitude of the terms it compares).
struct KktReport {
  double stationarity = 0.0;
  double primal = 0.0;
  double dual_sign = 0.0;
  double complementarity = 0.0;

  double max() const;
};

KktReport check_kkt(const QPProblem& problem, const Eigen::VectorXd& z,
                    const Eigen::VectorXd& dual_box, const Eigen::VectorXd& dual_ineq);

}  // namespace kdpc
