#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace kdpc {

struct PlantState {
  double x1 = 0.0;
  double x2 = 0.0;
};

struct VdpParams {
  double mu_vdp = 1.0;  // damping
  double ts = 0.05;     // sampling time [s]

  void validate() const;
};

enum class Channel { input, output };

struct DisturbanceInterval {
  double t_start = 0.0;
  double t_end = 0.0;
  double value = 0.0;
  Channel channel = Channel::input;
};

/// Piecewise-constant disturbance. An interval is active on [t_start, t_end).
class DisturbanceSchedule {
 public:
  DisturbanceSchedule() = default;
  explicit DisturbanceSchedule(std::vector<DisturbanceInterval> intervals);

  double value_at(double t, Channel channel) const;
  const std::vector<DisturbanceInterval>& intervals() const { return intervals_; }
  bool empty() const { return intervals_.empty(); }

 private:
  std::vector<DisturbanceInterval> intervals_;
};

/// One Euler step of the discrete Van der Pol oscillator. The input
/// disturbance enters through the same column as u.
PlantState vdp_step(const PlantState& x, double u, double d_in, const VdpParams& p);

/// y = x1 + d_out.
double measure(const PlantState& x, double d_out);

/// Generic single-input single-output discrete plant.
class Plant {
 public:
  virtual ~Plant() = default;
  virtual Eigen::Index state_dim() const = 0;
  virtual double sampling_time() const = 0;
  virtual Eigen::VectorXd step(const Eigen::VectorXd& x, double u, double d_in) const = 0;
  virtual double measure(const Eigen::VectorXd& x, double d_out) const = 0;
};

class VanDerPolPlant final : public Plant {
 public:
  explicit VanDerPolPlant(VdpParams p = {});

  Eigen::Index state_dim() const override { return 2; }
  double sampling_time() const override { return params_.ts; }
  Eigen::VectorXd step(const Eigen::VectorXd& x, double u, double d_in) const override;
  double measure(const Eigen::VectorXd& x, double d_out) const override;
  const VdpParams& params() const { return params_; }

 private:
  VdpParams params_;
};

/// Input/output record. u[i] is applied at sample i and y[i] is the output
/// measured one sample later, so y[i] is the first output that u[i] can move.
struct Trajectory {
  std::vector<double> u;
  std::vector<double> y;

  std::size_t size() const { return u.size(); }
};

/// Applies `inputs` from x0 starting at time t0. Throws ErrorCode::diverged
/// on a non-finite state.
Trajectory simulate(const Plant& plant, const Eigen::VectorXd& x0,
                    std::span<const double> inputs,
                    const DisturbanceSchedule& dist, double t0 = 0.0);

Trajectory simulate(const PlantState& x0, std::span<const double> inputs,
                    const DisturbanceSchedule& dist, const VdpParams& p);

}  // namespace kdpc
