#pragma once

#include <Eigen/Dense>

namespace kdpc {

enum class KernelFamily { gaussian_rbf };

/// k(x, y) = exp(-|x - y|^2 / (2 sigma^2)).
struct KernelSpec {
  KernelFamily family = KernelFamily::gaussian_rbf;
  double bandwidth = 1.0;

  void validate() const;
};

using VectorRef = Eigen::Ref<const Eigen::VectorXd>;
using MatrixRef = Eigen::Ref<const Eigen::MatrixXd>;

double eval(const KernelSpec& k, const VectorRef& x, const VectorRef& y);

/// Gram matrix over the columns of `points` (d x m). Exactly symmetric with a
/// unit diagonal.
Eigen::MatrixXd gram(const KernelSpec& k, const MatrixRef& points);

/// Entry j is eval(points.col(j), query).
Eigen::VectorXd similarity_vector(const KernelSpec& k, const MatrixRef& points,
                                  const VectorRef& query);

/// Gradient of eval(d_j, .) at the origin, as a row:
/// (1/sigma^2) * k(d_j, 0) * d_j^T.
Eigen::RowVectorXd rbf_jacobian_row_at_zero(const KernelSpec& k, const VectorRef& d_j);

/// Median of the pairwise Euclidean distances between the columns of
/// `points`. Falls back to 1 when every pair coincides or m < 2.
double median_heuristic(const MatrixRef& points);

}  // namespace kdpc
