#include "kdpc/data.hpp"

#include "kdpc/error.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>
#include <string>

namespace kdpc {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Uniform on [lo, hi] from the top 53 bits; unlike
// std::uniform_real_distribution this is identical across standard libraries.
class Uniform {
 public:
  explicit Uniform(std::uint64_t seed) : gen_(seed) {}
  double operator()(double lo, double hi) {
    const double unit = static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * unit;
  }
  std::uint64_t next_seed() { return gen_(); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace

void Dataset::validate() const {
  require(t_ini > 0 && n_horizon > 0, ErrorCode::invalid_argument,
          "dataset needs t_ini > 0 and n_horizon > 0");
  const Eigen::Index t = d_ini.cols();
  require(t >= 1, ErrorCode::invalid_argument, "dataset has no columns");
  require(d_f_u.cols() == t && y_f.cols() == t, ErrorCode::dimension_mismatch,
          "dataset matrices differ in column count");
  require(d_ini.rows() == 2 * t_ini && d_f_u.rows() == n_horizon && y_f.rows() == n_horizon,
          ErrorCode::dimension_mismatch, "dataset row counts do not match t_ini / n_horizon");
  require(d_ini.allFinite() && d_f_u.allFinite() && y_f.allFinite(), ErrorCode::invalid_argument,
          "dataset contains non-finite entries");
}

bool Dataset::is_equilibrium_column(Eigen::Index i) const {
  const double level = y_f(0, i);
  return d_ini.col(i).head(t_ini).isZero(0.0) && d_f_u.col(i).isZero(0.0) &&
         (d_ini.col(i).tail(t_ini).array() == level).all() && (y_f.col(i).array() == level).all();
}

void ExcitationConfig::validate() const {
  require(std::isfinite(amplitude) && amplitude >= 0.0, ErrorCode::invalid_argument,
          "excitation amplitude must be >= 0");
  require(hold_steps >= 1, ErrorCode::invalid_argument, "hold_steps must be >= 1");
}

std::vector<double> generate_excitation(const ExcitationConfig& cfg) {
  cfg.validate();
  Uniform draw(splitmix64(cfg.seed));
  std::vector<double> out(cfg.length);
  double level = 0.0;
  for (std::size_t i = 0; i < cfg.length; ++i) {
    if (i % cfg.hold_steps == 0) level = draw(-cfg.amplitude, cfg.amplitude);
    out[i] = level;
  }
  return out;
}

void CollectionConfig::validate() const {
  require(runs >= 1, ErrorCode::invalid_argument, "collection needs at least one run");
  for (const double level : equilibrium_levels) {
    require(std::isfinite(level), ErrorCode::invalid_argument,
            "equilibrium levels must be finite");
  }
  require(std::isfinite(amplitude) && amplitude >= 0.0, ErrorCode::invalid_argument,
          "excitation amplitude must be >= 0");
  require(hold_steps >= 1 && stride >= 1, ErrorCode::invalid_argument,
          "hold_steps and stride must be >= 1");
  require(x1_min <= x1_max && x2_spread >= 0.0 && input_spread >= 0.0,
          ErrorCode::invalid_argument, "invalid initial-state ranges");
  require(equilibrium_fraction >= 0.0 && equilibrium_fraction <= 1.0,
          ErrorCode::invalid_argument, "equilibrium_fraction must lie in [0, 1]");
}

std::vector<Trajectory> collect_trajectories(const CollectionConfig& cfg, const VdpParams& plant,
                                             Eigen::Index t_ini, Eigen::Index n_horizon,
                                             std::uint64_t seed) {
  cfg.validate();
  plant.validate();
  const auto min_len = static_cast<std::size_t>(t_ini + n_horizon + 1);
  const std::size_t len = cfg.run_length == 0 ? min_len : cfg.run_length;
  require(len >= min_len, ErrorCode::invalid_argument,
          "run_length must be at least t_ini + n_horizon + 1 = " + std::to_string(min_len));

  std::vector<Trajectory> out;
  out.reserve(cfg.runs + cfg.equilibrium_levels.size());
  const DisturbanceSchedule none;
  // For this plant the equilibrium with output c has x = (c, 0) and u = c.
  for (const double level : cfg.equilibrium_levels) {
    const std::vector<double> u(len, level);
    out.push_back(simulate(PlantState{level, 0.0}, u, none, plant));
  }
  for (std::size_t r = 0; r < cfg.runs; ++r) {
    Uniform draw(splitmix64(seed ^ splitmix64(r + 1)));
    std::vector<double> u(len, 0.0);
    PlantState x0;
    {
      ExcitationConfig ex{cfg.mode == ExcitationMode::level ? len : len - 1, cfg.amplitude,
                          cfg.hold_steps, draw.next_seed()};
      const auto signal = generate_excitation(ex);
      if (cfg.mode == ExcitationMode::level) {
        u = signal;
      } else {
        const bool at_eq = draw(0.0, 1.0) < cfg.equilibrium_fraction;
        x0.x1 = draw(cfg.x1_min, cfg.x1_max);
        x0.x2 = at_eq ? 0.0 : draw(-cfg.x2_spread, cfg.x2_spread);
        u[0] = x0.x1 + (at_eq ? 0.0 : draw(-cfg.input_spread, cfg.input_spread));
        for (std::size_t i = 1; i < len; ++i) u[i] = u[i - 1] + signal[i - 1];
      }
    }
    out.push_back(simulate(x0, u, none, plant));
  }
  return out;
}

Dataset assemble_dataset(std::span<const Trajectory> trajectories, Eigen::Index t_ini,
                         Eigen::Index n_horizon, std::size_t stride) {
  require(t_ini > 0 && n_horizon > 0, ErrorCode::invalid_argument,
          "t_ini and n_horizon must be positive");
  require(stride >= 1, ErrorCode::invalid_argument, "stride must be >= 1");
  const auto min_len = static_cast<std::size_t>(t_ini + n_horizon + 1);
  const auto st = static_cast<Eigen::Index>(stride);

  Eigen::Index total = 0;
  for (std::size_t k = 0; k < trajectories.size(); ++k) {
    const auto& tr = trajectories[k];
    require(tr.u.size() == tr.y.size(), ErrorCode::dimension_mismatch,
            "trajectory " + std::to_string(k) + " has mismatched u and y lengths");
    require(tr.size() >= min_len, ErrorCode::invalid_argument,
            "trajectory " + std::to_string(k) + " is shorter than t_ini + n_horizon + 1");
    const auto windows = static_cast<Eigen::Index>(tr.size()) - t_ini - n_horizon;
    total += (windows + st - 1) / st;
  }

  Dataset ds;
  ds.t_ini = t_ini;
  ds.n_horizon = n_horizon;
  ds.d_ini.resize(2 * t_ini, total);
  ds.d_f_u.resize(n_horizon, total);
  ds.y_f.resize(n_horizon, total);

  Eigen::Index col = 0;
  for (const auto& tr : trajectories) {
    const auto len = static_cast<Eigen::Index>(tr.size());
    auto du = [&](Eigen::Index i) {
      return tr.u[static_cast<std::size_t>(i)] - tr.u[static_cast<std::size_t>(i - 1)];
    };
    auto y = [&](Eigen::Index i) { return tr.y[static_cast<std::size_t>(i)]; };
    for (Eigen::Index s = 1; s + t_ini + n_horizon <= len; s += st, ++col) {
      for (Eigen::Index i = 0; i < t_ini; ++i) {
        ds.d_ini(i, col) = du(s + i);
        ds.d_ini(t_ini + i, col) = y(s + i);
      }
      for (Eigen::Index i = 0; i < n_horizon; ++i) {
        ds.d_f_u(i, col) = du(s + t_ini + i);
        ds.y_f(i, col) = y(s + t_ini + i);
      }
    }
  }
  ds.validate();
  return ds;
}

double check_pe(const Eigen::MatrixXd& k_pp) {
  require(k_pp.rows() == k_pp.cols() && k_pp.rows() > 0, ErrorCode::dimension_mismatch,
          "check_pe needs a non-empty square matrix");
  const double asym = (k_pp - k_pp.transpose()).lpNorm<Eigen::Infinity>();
  require(asym <= 1e-12 * (1.0 + k_pp.lpNorm<Eigen::Infinity>()), ErrorCode::invalid_argument,
          "check_pe needs a symmetric matrix");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(k_pp, Eigen::EigenvaluesOnly);
  require(eig.info() == Eigen::Success, ErrorCode::fit_failure, "eigenvalue solve failed");
  return eig.eigenvalues()(0);
}

}  // namespace kdpc
