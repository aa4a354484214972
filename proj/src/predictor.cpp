#include "kdpc/predictor.hpp"

#include "kdpc/error.hpp"

#include <cmath>
#include <string>

namespace kdpc {

namespace {

Eigen::LLT<Eigen::MatrixXd> factor(const Eigen::MatrixXd& k, double reg,
                                   const Eigen::VectorXd& scale, const char* what) {
  require(k.rows() == k.cols(), ErrorCode::dimension_mismatch,
          std::string(what) + ": Gram matrix must be square");
  require(scale.size() == k.rows(), ErrorCode::dimension_mismatch,
          std::string(what) + ": regularisation scale has wrong length");
  require(std::isfinite(reg) && reg > 0.0, ErrorCode::invalid_argument,
          std::string(what) + ": regularisation must be > 0");
  Eigen::MatrixXd a = k;
  a.diagonal() += reg * scale;
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(k, Eigen::EigenvaluesOnly);
    fail(ErrorCode::fit_failure, std::string(what) + ": Cholesky failed, lambda_min(K) = " +
                                     std::to_string(eig.eigenvalues()(0)));
  }
  return llt;
}

// X A = B for symmetric A given its factor, with one refinement step.
Eigen::MatrixXd right_solve(const Eigen::LLT<Eigen::MatrixXd>& llt, const Eigen::MatrixXd& a,
                            const Eigen::MatrixXd& b) {
  Eigen::MatrixXd x = llt.solve(b.transpose()).transpose();
  const Eigen::MatrixXd r = b - x * a;
  x += llt.solve(r.transpose()).transpose();
  return x;
}

Eigen::MatrixXd regularized(const Eigen::MatrixXd& k, double reg, const Eigen::VectorXd& scale) {
  Eigen::MatrixXd a = k;
  a.diagonal() += reg * scale;
  return a;
}

}  // namespace

void Predictors::validate() const {
  require(lambda_reg > 0.0 && mu_reg > 0.0, ErrorCode::invalid_argument,
          "predictor regularisation must be > 0");
  require(t_ini > 0 && n_horizon > 0, ErrorCode::invalid_argument,
          "predictor horizons must be positive");
  require(p1.rows() == n_horizon && p2.rows() == n_horizon && p2.cols() == n_horizon,
          ErrorCode::dimension_mismatch, "predictor matrices do not match n_horizon");
  require(past_points.rows() == 2 * t_ini && past_points.cols() == p1.cols(),
          ErrorCode::dimension_mismatch, "past windows do not match P1");
  require(p1.allFinite() && p2.allFinite() && past_points.allFinite(),
          ErrorCode::invalid_argument, "predictor contains non-finite entries");
  kernel_past.validate();
  kernel_future.validate();
}

Eigen::MatrixXd fit_p1(const Eigen::MatrixXd& y_f, const Eigen::MatrixXd& k_pp,
                       double lambda_reg) {
  return fit_p1(y_f, k_pp, lambda_reg, Eigen::VectorXd::Ones(k_pp.rows()));
}

Eigen::MatrixXd fit_p1(const Eigen::MatrixXd& y_f, const Eigen::MatrixXd& k_pp, double lambda_reg,
                       const Eigen::VectorXd& scale) {
  require(y_f.cols() == k_pp.rows(), ErrorCode::dimension_mismatch,
          "fit_p1: Y_f column count differs from Gram size");
  const auto llt = factor(k_pp, lambda_reg, scale, "fit_p1");
  return right_solve(llt, regularized(k_pp, lambda_reg, scale), y_f);
}

Eigen::VectorXd compute_alpha_p(const Eigen::MatrixXd& k_pp, double lambda_reg,
                                const Eigen::VectorXd& k_p_ini) {
  return compute_alpha_p(k_pp, lambda_reg, Eigen::VectorXd::Ones(k_pp.rows()), k_p_ini);
}

Eigen::VectorXd compute_alpha_p(const Eigen::MatrixXd& k_pp, double lambda_reg,
                                const Eigen::VectorXd& scale, const Eigen::VectorXd& k_p_ini) {
  require(k_p_ini.size() == k_pp.rows(), ErrorCode::dimension_mismatch,
          "compute_alpha_p: query length differs from Gram size");
  const auto llt = factor(k_pp, lambda_reg, scale, "compute_alpha_p");
  Eigen::VectorXd alpha = llt.solve(k_p_ini);
  alpha += llt.solve(k_p_ini - regularized(k_pp, lambda_reg, scale) * alpha);
  return alpha;
}

Eigen::MatrixXd future_jacobian(const Eigen::MatrixXd& d_f_u, const KernelSpec& k) {
  Eigen::MatrixXd j(d_f_u.cols(), d_f_u.rows());
  for (Eigen::Index c = 0; c < d_f_u.cols(); ++c) {
    j.row(c) = rbf_jacobian_row_at_zero(k, d_f_u.col(c));
  }
  return j;
}

Eigen::MatrixXd fit_p2(const Eigen::MatrixXd& d_f_u, const Eigen::MatrixXd& k_ff, double mu_reg,
                       const Eigen::MatrixXd& y_f, const KernelSpec& k) {
  require(d_f_u.cols() == k_ff.rows() && y_f.cols() == k_ff.rows(),
          ErrorCode::dimension_mismatch, "fit_p2: column counts differ from Gram size");
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(k_ff.rows());
  const auto llt = factor(k_ff, mu_reg, ones, "fit_p2");
  const Eigen::MatrixXd jac = future_jacobian(d_f_u, k);
  Eigen::MatrixXd x = llt.solve(jac);
  x += llt.solve(jac - regularized(k_ff, mu_reg, ones) * x);
  return y_f * x;
}

void FitConfig::validate() const {
  require(std::isfinite(lambda_reg) && lambda_reg > 0.0, ErrorCode::invalid_argument,
          "lambda must be > 0");
  require(std::isfinite(mu_reg) && mu_reg > 0.0, ErrorCode::invalid_argument, "mu must be > 0");
  require(bandwidth_past >= 0.0 && bandwidth_future >= 0.0, ErrorCode::invalid_argument,
          "bandwidths must be >= 0 (0 selects the median heuristic)");
  require(bandwidth_past_scale > 0.0 && bandwidth_future_scale > 0.0,
          ErrorCode::invalid_argument, "bandwidth scales must be > 0");
  require(equilibrium_weight >= 1.0, ErrorCode::invalid_argument,
          "equilibrium_weight must be >= 1");
}

Eigen::VectorXd regularization_scale(const Dataset& data, const FitConfig& cfg) {
  Eigen::VectorXd s = Eigen::VectorXd::Ones(data.num_columns());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (data.is_equilibrium_column(i)) s(i) = 1.0 / cfg.equilibrium_weight;
  }
  return s;
}

Predictors fit_predictors(const Dataset& data, const FitConfig& cfg, FitReport* report) {
  data.validate();
  cfg.validate();
  Predictors p;
  p.t_ini = data.t_ini;
  p.n_horizon = data.n_horizon;
  p.lambda_reg = cfg.lambda_reg;
  p.mu_reg = cfg.mu_reg;
  p.kernel_past.bandwidth = cfg.bandwidth_past > 0.0
                                ? cfg.bandwidth_past
                                : cfg.bandwidth_past_scale * median_heuristic(data.d_ini);
  p.kernel_future.bandwidth = cfg.bandwidth_future > 0.0
                                  ? cfg.bandwidth_future
                                  : cfg.bandwidth_future_scale * median_heuristic(data.d_f_u);
  p.past_points = data.d_ini;

  const Eigen::MatrixXd k_pp = gram(p.kernel_past, data.d_ini);
  const Eigen::MatrixXd k_ff = gram(p.kernel_future, data.d_f_u);
  const Eigen::VectorXd scale = regularization_scale(data, cfg);
  p.p1 = fit_p1(data.y_f, k_pp, cfg.lambda_reg, scale);
  p.p2 = fit_p2(data.d_f_u, k_ff, cfg.mu_reg, data.y_f, p.kernel_future);
  p.validate();

  if (report != nullptr) {
    report->lambda_min_past = check_pe(k_pp);
    report->equilibrium_columns = (scale.array() < 1.0).count();
    const double ymax = std::max(data.y_f.lpNorm<Eigen::Infinity>(), 1e-300);
    report->p1_residual =
        (p.p1 * regularized(k_pp, cfg.lambda_reg, scale) - data.y_f).lpNorm<Eigen::Infinity>() /
        ymax;
  }
  return p;
}

Eigen::VectorXd past_similarity(const Predictors& p, const Eigen::VectorXd& z_ini) {
  return similarity_vector(p.kernel_past, p.past_points, z_ini);
}

Eigen::VectorXd predict(const Predictors& p, const Eigen::VectorXd& k_p_ini,
                        const Eigen::VectorXd& du) {
  require(k_p_ini.size() == p.p1.cols() && du.size() == p.p2.cols(),
          ErrorCode::dimension_mismatch, "predict: argument dimensions do not match");
  return p.p1 * k_p_ini + p.p2 * du;
}

ValidationReport open_loop_validate(const Predictors& p, const Dataset& data) {
  require(data.t_ini == p.t_ini && data.n_horizon == p.n_horizon, ErrorCode::dimension_mismatch,
          "validation data horizons differ from the predictor");
  ValidationReport rep;
  rep.windows = data.num_columns();
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(p.n_horizon);
  for (Eigen::Index c = 0; c < data.num_columns(); ++c) {
    const Eigen::VectorXd y_hat =
        predict(p, past_similarity(p, data.d_ini.col(c)), data.d_f_u.col(c));
    sq += (y_hat - data.y_f.col(c)).array().square().matrix();
  }
  const double w = static_cast<double>(std::max<Eigen::Index>(rep.windows, 1));
  rep.rmse_per_step = (sq / w).array().sqrt();
  rep.rmse = std::sqrt(sq.sum() / (w * static_cast<double>(p.n_horizon)));
  return rep;
}

ValidationReport open_loop_validate(const Predictors& p, const VdpParams& plant,
                                    const CollectionConfig& cfg, std::uint64_t seed) {
  const auto runs = collect_trajectories(cfg, plant, p.t_ini, p.n_horizon, seed);
  const Dataset data = assemble_dataset(runs, p.t_ini, p.n_horizon, cfg.stride);
  return open_loop_validate(p, data);
}

}  // namespace kdpc
