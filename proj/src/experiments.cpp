#include "kdpc/experiments.hpp"

#include "kdpc/error.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace kdpc {

namespace {

constexpr double kTimeGuard = 1e-9;

}  // namespace

ReferenceSchedule::ReferenceSchedule(std::vector<std::pair<double, double>> steps)
    : steps_(std::move(steps)) {
  for (const auto& [t, v] : steps_) {
    require(std::isfinite(t) && std::isfinite(v), ErrorCode::invalid_argument,
            "reference steps must be finite");
  }
  std::stable_sort(steps_.begin(), steps_.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
}

double ReferenceSchedule::value_at(double t) const {
  double v = 0.0;
  for (const auto& [ts, val] : steps_) {
    if (t >= ts - kTimeGuard) v = val;
  }
  return v;
}

Eigen::VectorXd ReferenceSchedule::preview(double t, Eigen::Index n, double ts) const {
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) out(i) = value_at(t + static_cast<double>(i + 1) * ts);
  return out;
}

std::string_view to_string(ControllerKind k) {
  return k == ControllerKind::kdpc ? "kdpc" : "nmpc";
}

void Scenario::validate() const {
  require(!name.empty(), ErrorCode::config, "scenario needs a name");
  require(std::isfinite(duration) && duration > 0.0, ErrorCode::config,
          "scenario '" + name + "': duration must be > 0");
  require(!controllers.empty(), ErrorCode::config,
          "scenario '" + name + "' lists no controllers");
  for (const auto& [t, v] : reference.steps()) {
    require(t >= 0.0 && t <= duration, ErrorCode::config,
            "scenario '" + name + "': reference step outside the duration");
  }
  for (const auto& iv : disturbance.intervals()) {
    require(iv.t_start >= 0.0 && iv.t_end <= duration + kTimeGuard, ErrorCode::config,
            "scenario '" + name + "': disturbance outside the duration");
  }
}

Scenario default_scenario(std::string name, Channel channel) {
  Scenario s;
  s.name = std::move(name);
  s.duration = 30.0;
  s.reference = ReferenceSchedule({{0.0, 0.0}, {5.0, 1.0}});
  s.disturbance = DisturbanceSchedule({{10.0, 20.0, 0.2, channel}});
  return s;
}

namespace {

ControllerTrace simulate_loop(const Scenario& s, ControllerKind kind,
                              const std::shared_ptr<const Predictors>& pred,
                              const ExperimentSettings& cfg) {
  const VdpParams& plant = cfg.plant;
  const auto steps = static_cast<std::size_t>(std::llround(s.duration / plant.ts));
  ControllerTrace tr;
  tr.kind = kind;

  std::optional<KdpcController> kdpc;
  std::optional<NmpcController> nmpc;
  Eigen::Index horizon = 0;
  if (kind == ControllerKind::kdpc) {
    kdpc.emplace(pred, cfg.kdpc, cfg.qp);
    horizon = cfg.kdpc.n_horizon;
  } else {
    nmpc.emplace(plant, cfg.nmpc, cfg.qp, 0.0, cfg.nmpc_linearizations);
    horizon = cfg.nmpc.n_horizon;
  }

  PlantState x;
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * plant.ts;
    const double d_in = s.disturbance.value_at(t, Channel::input);
    const double d_out = s.disturbance.value_at(t, Channel::output);
    const double y = measure(x, d_out);
    const Eigen::VectorXd ref = s.reference.preview(t, horizon, plant.ts);

    StepRecord rec = kdpc ? kdpc->step(y, ref) : nmpc->step(x, ref);

    tr.t.push_back(t);
    tr.y.push_back(y);
    tr.y_ref.push_back(s.reference.value_at(t));
    tr.u.push_back(rec.u_applied);
    tr.delta_u.push_back(rec.delta_u_first);
    tr.d_in.push_back(d_in);
    tr.d_out.push_back(d_out);
    tr.cost.push_back(rec.optimal_cost);
    tr.slack.push_back(rec.slack_norm);
    tr.kkt.push_back(rec.kkt_residual);
    tr.status.push_back(rec.status);

    try {
      x = vdp_step(x, rec.u_applied, d_in, plant);
      if (std::abs(x.x1) > 1e6 || std::abs(x.x2) > 1e6) {
        fail(ErrorCode::diverged, "state left the bounded region");
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::diverged) throw;
      tr.diverged_at = k;
      break;
    }
  }
  return tr;
}

}  // namespace

ExperimentResult run_scenario(const Scenario& s, std::shared_ptr<const Predictors> predictors,
                              const ExperimentSettings& settings) {
  s.validate();
  ExperimentResult res;
  res.scenario = s.name;
  for (const auto kind : s.controllers) {
    if (kind == ControllerKind::kdpc) {
      require(predictors != nullptr, ErrorCode::invalid_argument,
              "scenario '" + s.name + "' needs fitted predictors for kdpc");
    }
    res.traces.push_back(simulate_loop(s, kind, predictors, settings));
  }
  return res;
}

double mean_abs_error(const ControllerTrace& tr, double t0, double t1) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    if (tr.t[i] >= t0 - kTimeGuard && tr.t[i] < t1 - kTimeGuard) {
      sum += std::abs(tr.y[i] - tr.y_ref[i]);
      ++n;
    }
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

double max_abs_error(const ControllerTrace& tr, double t0, double t1) {
  double m = 0.0;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    if (tr.t[i] >= t0 - kTimeGuard && tr.t[i] < t1 - kTimeGuard) {
      m = std::max(m, std::abs(tr.y[i] - tr.y_ref[i]));
    }
  }
  return m;
}

Metrics compute_metrics(const ControllerTrace& tr, const Scenario& s,
                        const ExperimentSettings& settings) {
  Metrics m;
  if (tr.size() == 0) return m;

  double sq = 0.0;
  std::size_t qp_steps = 0;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    const double e = tr.y[i] - tr.y_ref[i];
    sq += e * e;
    if (tr.status[i] != StepStatus::warmup) {
      ++qp_steps;
      if (tr.status[i] == StepStatus::optimal) ++ok;
    }
  }
  m.rms_error = std::sqrt(sq / static_cast<double>(tr.size()));
  m.feasible_fraction =
      qp_steps == 0 ? 1.0 : static_cast<double>(ok) / static_cast<double>(qp_steps);

  // Segment boundaries: every reference or disturbance change.
  std::set<double> edges{0.0, s.duration};
  for (const auto& [t, v] : s.reference.steps()) edges.insert(t);
  for (const auto& iv : s.disturbance.intervals()) {
    edges.insert(iv.t_start);
    edges.insert(std::min(iv.t_end, s.duration));
  }
  const std::vector<double> e(edges.begin(), edges.end());
  for (std::size_t i = 0; i + 1 < e.size(); ++i) {
    if (e[i + 1] - e[i] <= kTimeGuard) continue;
    SegmentError seg{e[i], e[i + 1], 0.0};
    const double from = e[i + 1] - settings.steady_fraction * (e[i + 1] - e[i]);
    seg.steady_state_error = mean_abs_error(tr, from, e[i + 1]);
    m.steady_state_error = std::max(m.steady_state_error, seg.steady_state_error);
    m.segments.push_back(seg);
  }

  // Overshoot and settling per reference step, measured until the next
  // reference or disturbance change.
  const auto& steps = s.reference.steps();
  double prev = 0.0;
  for (std::size_t j = 0; j < steps.size(); ++j) {
    const auto [ts, target] = steps[j];
    const double size = target - prev;
    prev = target;
    if (size == 0.0) continue;
    const auto next = edges.upper_bound(ts + kTimeGuard);
    const double until = next == edges.end() ? s.duration : *next;
    const double band = settings.settle_band * std::abs(size);
    const double dir = size > 0.0 ? 1.0 : -1.0;
    double last_out = ts;
    bool any = false;
    for (std::size_t i = 0; i < tr.size(); ++i) {
      if (tr.t[i] < ts - kTimeGuard || tr.t[i] >= until - kTimeGuard) continue;
      any = true;
      const double err = tr.y[i] - target;
      m.max_overshoot = std::max(m.max_overshoot, dir * err);
      if (std::abs(err) > band) last_out = tr.t[i] + settings.plant.ts;
    }
    if (!any) continue;
    m.settle_time = std::max(m.settle_time, last_out - ts);
  }
  return m;
}

}  // namespace kdpc
