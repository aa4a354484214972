#include "kdpc/pipeline.hpp"

#include "kdpc/error.hpp"
#include "kdpc/io.hpp"
#include "kdpc/kernel.hpp"
#include "kdpc/plot.hpp"

#include "json.hpp"

#include <cstdio>
#include <exception>
#include <limits>
#include <thread>

namespace kdpc {

namespace {

using nlohmann::json;

constexpr const char* kVersion = "0.1.0";

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// The output location is left out so artifacts do not depend on where they
// were written.
std::string provenance_yaml(const RunConfig& cfg) {
  RunConfig c = cfg;
  c.output_dir = RunConfig{}.output_dir;
  return to_yaml(c);
}

std::uint64_t validation_seed(std::uint64_t seed) { return seed ^ 0x5bd1e9955bd1e995ULL; }

// Records every regular file below `dir` (except the manifest) with its hash.
void write_manifest(const fs::path& dir, const std::string& stage, const RunConfig& cfg,
                    json extra) {
  json m = {{"artifact", "kdpc"},
            {"version", kVersion},
            {"stage", stage},
            {"seed", cfg.seed},
            {"config_sha256", sha256_hex(provenance_yaml(cfg))}};
  for (auto& [k, v] : extra.items()) m[k] = v;
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().filename() != "manifest.json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  json f = json::object();
  for (const auto& p : files) f[fs::relative(p, dir).generic_string()] = sha256_file(p);
  m["files"] = f;
  write_text(dir / "manifest.json", m.dump(2) + "\n");
}

CollectionConfig validation_collection(const RunConfig& cfg) {
  CollectionConfig v = cfg.collection;
  v.runs = cfg.validation_runs;
  v.equilibrium_levels.clear();
  return v;
}

std::string plot_scenario(const ExperimentResult& res) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  PlotPanel out{"y", {}};
  PlotPanel err{"y - y_ref", {}};
  PlotPanel inp{"u", {}};
  PlotPanel dist{"d", {}};
  for (std::size_t i = 0; i < res.traces.size(); ++i) {
    const auto& tr = res.traces[i];
    const std::string name(to_string(tr.kind));
    const std::string color = colors[i % 4];
    std::vector<double> e(tr.size());
    std::vector<double> d(tr.size());
    for (std::size_t k = 0; k < tr.size(); ++k) {
      e[k] = tr.y[k] - tr.y_ref[k];
      d[k] = tr.d_in[k] + tr.d_out[k];
    }
    out.series.push_back({name, tr.t, tr.y, color, false});
    err.series.push_back({name, tr.t, e, color, false});
    inp.series.push_back({name, tr.t, tr.u, color, false});
    if (i == 0) {
      out.series.push_back({"reference", tr.t, tr.y_ref, "#000000", true});
      dist.series.push_back({"disturbance", tr.t, d, "#7f7f7f", false});
    }
  }
  return render_svg(res.scenario, "time [s]", {out, err, inp, dist});
}

ScenarioSummary summarize(const Scenario& s, const ExperimentResult& res,
                          const ExperimentSettings& settings) {
  ScenarioSummary sum;
  sum.name = s.name;
  double dist_end = s.duration;
  if (!s.disturbance.empty()) dist_end = s.disturbance.intervals().front().t_end;
  for (const auto& tr : res.traces) {
    ControllerSummary c;
    c.kind = tr.kind;
    c.metrics = compute_metrics(tr, s, settings);
    c.disturbed_error = mean_abs_error(tr, dist_end - 3.0, dist_end);
    c.final_error = max_abs_error(tr, s.duration - 2.0, s.duration);
    c.diverged = tr.diverged_at.has_value();
    sum.controllers.push_back(c);
  }
  return sum;
}

json metrics_json(const ControllerSummary& c, const ControllerTrace& tr) {
  json seg = json::array();
  for (const auto& s : c.metrics.segments) {
    seg.push_back({{"t_start", s.t_start}, {"t_end", s.t_end},
                   {"steady_state_error", s.steady_state_error}});
  }
  json j = {{"rms_error", c.metrics.rms_error},
            {"steady_state_error", c.metrics.steady_state_error},
            {"max_overshoot", c.metrics.max_overshoot},
            {"settle_time", c.metrics.settle_time},
            {"feasible_fraction", c.metrics.feasible_fraction},
            {"disturbed_window_error", c.disturbed_error},
            {"final_2s_max_error", c.final_error},
            {"segments", seg},
            {"diverged", c.diverged}};
  if (tr.diverged_at) j["diverged_at_step"] = *tr.diverged_at;
  return j;
}

}  // namespace

CollectSummary run_collect(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  cfg.validate();
  const auto runs =
      collect_trajectories(cfg.collection, cfg.plant, cfg.t_ini, cfg.n_horizon, cfg.seed);
  const Dataset data = assemble_dataset(runs, cfg.t_ini, cfg.n_horizon, cfg.collection.stride);

  CollectSummary sum;
  sum.columns = data.num_columns();
  sum.trajectories = runs.size();
  KernelSpec k;
  k.bandwidth = cfg.fit.bandwidth_past > 0.0
                    ? cfg.fit.bandwidth_past
                    : cfg.fit.bandwidth_past_scale * median_heuristic(data.d_ini);
  sum.bandwidth_past = k.bandwidth;
  sum.lambda_min = check_pe(gram(k, data.d_ini));

  log << "collected " << sum.trajectories << " trajectories, T = " << sum.columns << " windows\n";
  log << "lambda_min(K_pp) = " << fmt(sum.lambda_min) << " (bandwidth " << fmt(k.bandwidth)
      << ")\n";
  // Below T * eps the smallest eigenvalue is indistinguishable from roundoff.
  const double singular_tol =
      static_cast<double>(sum.columns) * std::numeric_limits<double>::epsilon();
  if (sum.lambda_min <= singular_tol) {
    fail(ErrorCode::pe_failure,
         "past-window Gram matrix is singular (lambda_min = " + fmt(sum.lambda_min) +
             "); increase data.amplitude or the initial-state spread, or remove duplicate runs");
  }
  if (sum.lambda_min < cfg.pe_warn_threshold) {
    sum.pe_warning = true;
    log << "warning: lambda_min(K_pp) is below " << fmt(cfg.pe_warn_threshold)
        << "; consider increasing data.amplitude (currently " << fmt(cfg.collection.amplitude)
        << ") to about " << fmt(2.0 * cfg.collection.amplitude) << "\n";
  }

  fs::create_directories(out_dir);
  save_dataset(out_dir, data);
  write_text(out_dir / "config.yaml", provenance_yaml(cfg));
  sum.dataset_hash = dataset_hash(out_dir);
  write_manifest(out_dir, "collect", cfg,
                 {{"dataset_sha256", sum.dataset_hash},
                  {"columns", sum.columns},
                  {"lambda_min_past_gram", sum.lambda_min}});
  return sum;
}

FitSummary run_fit(const RunConfig& cfg, const fs::path& dataset_dir, const fs::path& out_dir,
                   std::ostream& log) {
  cfg.validate();
  const Dataset data = load_dataset(dataset_dir);
  require(data.t_ini == cfg.t_ini && data.n_horizon == cfg.n_horizon, ErrorCode::config,
          "dataset was built with t_ini=" + std::to_string(data.t_ini) +
              ", n_horizon=" + std::to_string(data.n_horizon) + " but the config asks for t_ini=" +
              std::to_string(cfg.t_ini) + ", n_horizon=" + std::to_string(cfg.n_horizon));

  FitSummary sum;
  Predictors p = fit_predictors(data, cfg.fit, &sum.report);
  p.dataset_hash = dataset_hash(dataset_dir);
  sum.training = open_loop_validate(p, data);
  sum.validation =
      open_loop_validate(p, cfg.plant, validation_collection(cfg), validation_seed(cfg.seed));

  log << "fitted predictors on T = " << data.num_columns() << " windows ("
      << sum.report.equilibrium_columns << " equilibrium windows)\n";
  log << "bandwidths: past " << fmt(p.kernel_past.bandwidth) << ", future "
      << fmt(p.kernel_future.bandwidth) << "; lambda_min(K_pp) = "
      << fmt(sum.report.lambda_min_past) << "\n";
  log << "open-loop RMSE: training " << fmt(sum.training.rmse) << ", validation "
      << fmt(sum.validation.rmse) << " over " << sum.validation.windows << " windows\n";

  fs::create_directories(out_dir);
  save_predictors(out_dir, p);
  Eigen::MatrixXd rmse(p.n_horizon, 3);
  for (Eigen::Index i = 0; i < p.n_horizon; ++i) {
    rmse(i, 0) = static_cast<double>(i + 1);
    rmse(i, 1) = sum.training.rmse_per_step(i);
    rmse(i, 2) = sum.validation.rmse_per_step(i);
  }
  write_matrix_csv(out_dir / "validation_rmse.csv", rmse);
  json report = {{"training_rmse", sum.training.rmse},
                 {"training_windows", sum.training.windows},
                 {"validation_rmse", sum.validation.rmse},
                 {"validation_windows", sum.validation.windows},
                 {"validation_rmse_columns", "step, training, validation"},
                 {"lambda_min_past_gram", sum.report.lambda_min_past},
                 {"p1_relative_residual", sum.report.p1_residual},
                 {"equilibrium_windows", sum.report.equilibrium_columns}};
  write_text(out_dir / "validation.json", report.dump(2) + "\n");
  write_text(out_dir / "config.yaml", provenance_yaml(cfg));
  sum.predictors_hash = predictors_hash(out_dir);
  write_manifest(out_dir, "fit", cfg,
                 {{"dataset_sha256", p.dataset_hash}, {"predictors_sha256", sum.predictors_hash}});
  return sum;
}

std::vector<std::pair<ExperimentResult, ScenarioSummary>> evaluate_scenarios(
    const RunConfig& cfg, std::shared_ptr<const Predictors> predictors, bool parallel) {
  cfg.validate();
  if (predictors) {
    require(predictors->t_ini == cfg.t_ini && predictors->n_horizon == cfg.n_horizon,
            ErrorCode::config, "predictors were fitted for a different t_ini / n_horizon");
  }
  const std::size_t n = cfg.scenarios.size();
  std::vector<std::pair<ExperimentResult, ScenarioSummary>> out(n);
  auto work = [&](std::size_t i) {
    const auto& s = cfg.scenarios[i];
    out[i].first = run_scenario(s, predictors, cfg.experiment);
    out[i].second = summarize(s, out[i].first, cfg.experiment);
  };
  if (parallel && n > 1) {
    std::vector<std::exception_ptr> errors(n);
    std::vector<std::thread> threads;
    for (std::size_t i = 0; i < n; ++i) {
      threads.emplace_back([&, i] {
        try {
          work(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      });
    }
    for (auto& t : threads) t.join();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) work(i);
  }
  return out;
}

RunSummary run_scenarios(const RunConfig& cfg, const fs::path& predictors_dir,
                         const fs::path& out_dir, bool parallel, std::ostream& log) {
  cfg.validate();
  bool needs_predictors = false;
  for (const auto& s : cfg.scenarios) {
    for (const auto k : s.controllers) needs_predictors |= k == ControllerKind::kdpc;
  }
  std::shared_ptr<const Predictors> pred;
  std::string pred_hash;
  if (needs_predictors) {
    require(fs::exists(predictors_dir / "p1.csv"), ErrorCode::io,
            "missing predictor artifacts in " + predictors_dir.string());
    pred = std::make_shared<const Predictors>(load_predictors(predictors_dir));
    pred_hash = predictors_hash(predictors_dir);
  }

  const auto results = evaluate_scenarios(cfg, pred, parallel);

  RunSummary sum;
  json metrics = json::object();
  fs::create_directories(out_dir);
  for (const auto& [res, s] : results) {
    const fs::path dir = out_dir / res.scenario;
    json mj = json::object();
    for (std::size_t i = 0; i < res.traces.size(); ++i) {
      const auto& tr = res.traces[i];
      const auto& c = s.controllers[i];
      const std::string name(to_string(tr.kind));
      write_trace_csv(dir / (name + ".csv"), tr);
      mj[name] = metrics_json(c, tr);
      sum.diverged |= c.diverged;
      log << res.scenario << " / " << name << ": steady-state error " << fmt(c.disturbed_error)
          << " (last 3 s of disturbance), final " << fmt(c.final_error) << ", feasible "
          << fmt(100.0 * c.metrics.feasible_fraction) << "%"
          << (c.diverged ? ", DIVERGED" : "") << "\n";
    }
    write_text(dir / "plot.svg", plot_scenario(res));
    metrics[res.scenario] = mj;
    sum.scenarios.push_back(s);
  }
  json doc = {{"steady_state_window",
               "mean |y - y_ref| over the last " + fmt(100.0 * cfg.experiment.steady_fraction) +
                   "% of each constant reference/disturbance segment"},
              {"scenarios", metrics}};
  write_text(out_dir / "metrics.json", doc.dump(2) + "\n");
  write_text(out_dir / "config.yaml", provenance_yaml(cfg));
  json extra = json::object();
  if (pred) {
    extra["predictors_sha256"] = pred_hash;
    extra["dataset_sha256"] = pred->dataset_hash;
  }
  write_manifest(out_dir, "run", cfg, extra);
  return sum;
}

RunSummary run_all(const RunConfig& cfg, const fs::path& out_dir, bool parallel,
                   std::ostream& log) {
  run_collect(cfg, out_dir / "dataset", log);
  run_fit(cfg, out_dir / "dataset", out_dir / "predictors", log);
  return run_scenarios(cfg, out_dir / "predictors", out_dir / "results", parallel, log);
}

}  // namespace kdpc
