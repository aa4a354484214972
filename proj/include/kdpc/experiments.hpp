#pragma once

#include "kdpc/controller.hpp"
#include "kdpc/plant.hpp"
#include "kdpc/predictor.hpp"
#include "kdpc/qp.hpp"

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace kdpc {

/// Piecewise-constant signal given as (start time, value) steps. The value
/// before the first step is 0 and the last value is held forever.
class ReferenceSchedule {
 public:
  ReferenceSchedule() = default;
  explicit ReferenceSchedule(std::vector<std::pair<double, double>> steps);

  double value_at(double t) const;
  /// Values at t + ts, ..., t + n ts.
  Eigen::VectorXd preview(double t, Eigen::Index n, double ts) const;
  const std::vector<std::pair<double, double>>& steps() const { return steps_; }

 private:
  std::vector<std::pair<double, double>> steps_;
};

enum class ControllerKind { kdpc, nmpc };

std::string_view to_string(ControllerKind k);

struct Scenario {
  std::string name;
  double duration = 30.0;
  ReferenceSchedule reference;
  DisturbanceSchedule disturbance;
  std::vector<ControllerKind> controllers{ControllerKind::kdpc, ControllerKind::nmpc};
  std::uint64_t seed = 0;

  void validate() const;
};

/// Reference step at 5 s and a 0.2 disturbance on [10, 20) s on the given
/// channel, 30 s long.
Scenario default_scenario(std::string name, Channel channel);

struct ExperimentSettings {
  VdpParams plant;
  ControllerConfig kdpc;
  ControllerConfig nmpc{10, 15, 100.0, 8.0, 1e4, 0.5, -0.4, 0.4, -5.0, 5.0};
  QPSettings qp;
  int nmpc_linearizations = 3;
  double steady_fraction = 0.2;  // tail of each segment used for steady state
  double settle_band = 0.02;     // relative to the step size
};

struct ControllerTrace {
  ControllerKind kind = ControllerKind::kdpc;
  std::vector<double> t, y, y_ref, u, delta_u, d_in, d_out, cost, slack, kkt;
  std::vector<StepStatus> status;
  std::optional<std::size_t> diverged_at;

  std::size_t size() const { return t.size(); }
};

struct ExperimentResult {
  std::string scenario;
  std::vector<ControllerTrace> traces;
};

/// Closed-loop simulation of every requested controller from rest. A
/// divergence stops that controller and is recorded in `diverged_at`.
ExperimentResult run_scenario(const Scenario& s, std::shared_ptr<const Predictors> predictors,
                              const ExperimentSettings& settings);

struct SegmentError {
  double t_start = 0.0;
  double t_end = 0.0;
  double steady_state_error = 0.0;
};

struct Metrics {
  double rms_error = 0.0;
  double steady_state_error = 0.0;  // worst segment
  double max_overshoot = 0.0;
  double settle_time = 0.0;  // worst reference step
  double feasible_fraction = 1.0;
  std::vector<SegmentError> segments;
};

Metrics compute_metrics(const ControllerTrace& trace, const Scenario& s,
                        const ExperimentSettings& settings);

/// Mean |y - y_ref| over samples with t in [t0, t1).
double mean_abs_error(const ControllerTrace& trace, double t0, double t1);

/// Max |y - y_ref| over samples with t in [t0, t1).
double max_abs_error(const ControllerTrace& trace, double t0, double t1);

}  // namespace kdpc
