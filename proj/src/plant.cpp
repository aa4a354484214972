#include "kdpc/plant.hpp"

#include "kdpc/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace kdpc {

namespace {

// Sample times are k * ts; compare against schedule edges with a small guard so
// that t = 10.000000000000002 still counts as t = 10.
constexpr double kTimeGuard = 1e-9;

}  // namespace

void VdpParams::validate() const {
  require(std::isfinite(ts) && ts > 0.0, ErrorCode::invalid_argument,
          "sampling time must be positive");
  require(std::isfinite(mu_vdp), ErrorCode::invalid_argument, "mu_vdp must be finite");
}

DisturbanceSchedule::DisturbanceSchedule(std::vector<DisturbanceInterval> intervals)
    : intervals_(std::move(intervals)) {
  for (const auto& iv : intervals_) {
    require(std::isfinite(iv.t_start) && std::isfinite(iv.t_end) && std::isfinite(iv.value),
            ErrorCode::invalid_argument, "disturbance interval must be finite");
    require(iv.t_start < iv.t_end, ErrorCode::invalid_argument,
            "disturbance interval needs t_start < t_end");
  }
  std::stable_sort(intervals_.begin(), intervals_.end(),
                   [](const auto& a, const auto& b) { return a.t_start < b.t_start; });
  for (std::size_t i = 0; i < intervals_.size(); ++i) {
    for (std::size_t j = i + 1; j < intervals_.size(); ++j) {
      const auto& a = intervals_[i];
      const auto& b = intervals_[j];
      if (a.channel == b.channel && b.t_start < a.t_end) {
        fail(ErrorCode::invalid_argument,
             "overlapping disturbance intervals on the same channel at t=" +
                 std::to_string(b.t_start));
      }
    }
  }
}

double DisturbanceSchedule::value_at(double t, Channel channel) const {
  for (const auto& iv : intervals_) {
    if (iv.channel == channel && t >= iv.t_start - kTimeGuard && t < iv.t_end - kTimeGuard) {
      return iv.value;
    }
  }
  return 0.0;
}

PlantState vdp_step(const PlantState& x, double u, double d_in, const VdpParams& p) {
  const double ts = p.ts;
  PlantState next;
  next.x1 = x.x1 + ts * x.x2;
  next.x2 = -ts * x.x1 + x.x2 + ts * u + ts * p.mu_vdp * (1.0 - x.x1 * x.x1) * x.x2 + ts * d_in;
  if (!std::isfinite(next.x1) || !std::isfinite(next.x2)) {
    fail(ErrorCode::diverged, "Van der Pol state became non-finite");
  }
  return next;
}

double measure(const PlantState& x, double d_out) { return x.x1 + d_out; }

VanDerPolPlant::VanDerPolPlant(VdpParams p) : params_(p) { params_.validate(); }

Eigen::VectorXd VanDerPolPlant::step(const Eigen::VectorXd& x, double u, double d_in) const {
  require(x.size() == 2, ErrorCode::dimension_mismatch, "Van der Pol state has 2 entries");
  const PlantState next = vdp_step({x(0), x(1)}, u, d_in, params_);
  return Eigen::Vector2d(next.x1, next.x2);
}

double VanDerPolPlant::measure(const Eigen::VectorXd& x, double d_out) const {
  require(x.size() == 2, ErrorCode::dimension_mismatch, "Van der Pol state has 2 entries");
  return kdpc::measure(PlantState{x(0), x(1)}, d_out);
}

Trajectory simulate(const Plant& plant, const Eigen::VectorXd& x0,
                    std::span<const double> inputs, const DisturbanceSchedule& dist,
                    double t0) {
  require(x0.size() == plant.state_dim(), ErrorCode::dimension_mismatch,
          "initial state has wrong dimension");
  Trajectory traj;
  traj.u.reserve(inputs.size());
  traj.y.reserve(inputs.size());
  const double ts = plant.sampling_time();
  Eigen::VectorXd x = x0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    require(std::isfinite(inputs[k]), ErrorCode::invalid_argument, "input must be finite");
    const double t = t0 + static_cast<double>(k) * ts;
    x = plant.step(x, inputs[k], dist.value_at(t, Channel::input));
    traj.u.push_back(inputs[k]);
    traj.y.push_back(plant.measure(x, dist.value_at(t + ts, Channel::output)));
  }
  return traj;
}

Trajectory simulate(const PlantState& x0, std::span<const double> inputs,
                    const DisturbanceSchedule& dist, const VdpParams& p) {
  return simulate(VanDerPolPlant(p), Eigen::Vector2d(x0.x1, x0.x2), inputs, dist);
}

}  // namespace kdpc
