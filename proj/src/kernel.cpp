#include "kdpc/kernel.hpp"

#include "kdpc/error.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace kdpc {

void KernelSpec::validate() const {
  require(std::isfinite(bandwidth) && bandwidth > 0.0, ErrorCode::invalid_argument,
          "kernel bandwidth must be positive");
}

double eval(const KernelSpec& k, const VectorRef& x, const VectorRef& y) {
  require(x.size() == y.size(), ErrorCode::dimension_mismatch,
          "kernel arguments differ in dimension");
  const double s2 = k.bandwidth * k.bandwidth;
  return std::exp(-(x - y).squaredNorm() / (2.0 * s2));
}

Eigen::MatrixXd gram(const KernelSpec& k, const MatrixRef& points) {
  k.validate();
  const Eigen::Index m = points.cols();
  const double inv = 1.0 / (2.0 * k.bandwidth * k.bandwidth);
  Eigen::MatrixXd out(m, m);
  // Fill the lower triangle column by column and mirror it.
  for (Eigen::Index j = 0; j < m; ++j) {
    out(j, j) = 1.0;
    for (Eigen::Index i = j + 1; i < m; ++i) {
      const double v = std::exp(-(points.col(i) - points.col(j)).squaredNorm() * inv);
      out(i, j) = v;
      out(j, i) = v;
    }
  }
  return out;
}

Eigen::VectorXd similarity_vector(const KernelSpec& k, const MatrixRef& points,
                                  const VectorRef& query) {
  require(points.rows() == query.size(), ErrorCode::dimension_mismatch,
          "query dimension does not match the data points");
  const double inv = 1.0 / (2.0 * k.bandwidth * k.bandwidth);
  Eigen::VectorXd out(points.cols());
  for (Eigen::Index j = 0; j < points.cols(); ++j) {
    out(j) = std::exp(-(points.col(j) - query).squaredNorm() * inv);
  }
  return out;
}

Eigen::RowVectorXd rbf_jacobian_row_at_zero(const KernelSpec& k, const VectorRef& d_j) {
  k.validate();
  const double s2 = k.bandwidth * k.bandwidth;
  const double kval = std::exp(-d_j.squaredNorm() / (2.0 * s2));
  return (kval / s2) * d_j.transpose();
}

double median_heuristic(const MatrixRef& points) {
  const Eigen::Index m = points.cols();
  if (m < 2) return 1.0;
  std::vector<double> dist;
  dist.reserve(static_cast<std::size_t>(m * (m - 1) / 2));
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index i = j + 1; i < m; ++i) {
      dist.push_back((points.col(i) - points.col(j)).norm());
    }
  }
  const auto n = dist.size();
  const auto mid = dist.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(dist.begin(), mid, dist.end());
  double med = *mid;
  if (n % 2 == 0) {
    med = 0.5 * (med + *std::max_element(dist.begin(), mid));
  }
  return med > 0.0 ? med : 1.0;
}

}  // namespace kdpc
