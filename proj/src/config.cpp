#include "kdpc/config.hpp"

#include "kdpc/error.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <sstream>

namespace kdpc {

namespace {

void check_keys(const YAML::Node& node, const std::string& where,
                std::initializer_list<const char*> allowed) {
  require(node.IsMap(), ErrorCode::config, where + ": expected a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    const bool ok = std::any_of(allowed.begin(), allowed.end(),
                                [&](const char* a) { return key == a; });
    require(ok, ErrorCode::config, where + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read(const YAML::Node& node, const char* key, const std::string& where, T* out) {
  const YAML::Node v = node[key];
  if (!v) return;
  try {
    *out = v.as<T>();
  } catch (const YAML::Exception&) {
    fail(ErrorCode::config, where + "." + key + ": malformed value");
  }
}

void read_index(const YAML::Node& node, const char* key, const std::string& where,
                Eigen::Index* out) {
  long long v = *out;
  read(node, key, where, &v);
  *out = static_cast<Eigen::Index>(v);
}

// "median" -> 0, otherwise a positive number.
void read_bandwidth(const YAML::Node& node, const char* key, const std::string& where,
                    double* out) {
  const YAML::Node v = node[key];
  if (!v) return;
  if (v.IsScalar() && v.Scalar() == "median") {
    *out = 0.0;
    return;
  }
  read(node, key, where, out);
  require(*out > 0.0, ErrorCode::config, where + "." + key + ": must be 'median' or > 0");
}

Channel parse_channel(const std::string& s, const std::string& where) {
  if (s == "input") return Channel::input;
  if (s == "output") return Channel::output;
  fail(ErrorCode::config, where + ": channel must be 'input' or 'output'");
}

ControllerKind parse_kind(const std::string& s, const std::string& where) {
  if (s == "kdpc") return ControllerKind::kdpc;
  if (s == "nmpc") return ControllerKind::nmpc;
  fail(ErrorCode::config, where + ": controller must be 'kdpc' or 'nmpc'");
}

void read_controller(const YAML::Node& node, const std::string& where, ControllerConfig* c,
                     int* linearizations) {
  if (!node) return;
  if (linearizations != nullptr) {
    check_keys(node, where,
               {"q", "r", "lambda_y", "sigma_bar", "du_min", "du_max", "y_min", "y_max",
                "linearizations"});
    read(node, "linearizations", where, linearizations);
  } else {
    check_keys(node, where,
               {"q", "r", "lambda_y", "sigma_bar", "du_min", "du_max", "y_min", "y_max"});
  }
  read(node, "q", where, &c->q);
  read(node, "r", where, &c->r);
  read(node, "lambda_y", where, &c->lambda_y);
  read(node, "sigma_bar", where, &c->sigma_bar);
  read(node, "du_min", where, &c->du_min);
  read(node, "du_max", where, &c->du_max);
  read(node, "y_min", where, &c->y_min);
  read(node, "y_max", where, &c->y_max);
}

Scenario read_scenario(const YAML::Node& node, const std::string& where) {
  check_keys(node, where,
             {"name", "duration", "reference", "disturbances", "controllers", "seed"});
  Scenario s;
  read(node, "name", where, &s.name);
  read(node, "duration", where, &s.duration);
  read(node, "seed", where, &s.seed);
  if (const auto ref = node["reference"]) {
    require(ref.IsSequence(), ErrorCode::config, where + ".reference: expected [[t, value], ...]");
    std::vector<std::pair<double, double>> steps;
    for (const auto& st : ref) {
      require(st.IsSequence() && st.size() == 2, ErrorCode::config,
              where + ".reference: each step is [t, value]");
      try {
        steps.emplace_back(st[0].as<double>(), st[1].as<double>());
      } catch (const YAML::Exception&) {
        fail(ErrorCode::config, where + ".reference: malformed step");
      }
    }
    s.reference = ReferenceSchedule(std::move(steps));
  }
  if (const auto dist = node["disturbances"]) {
    require(dist.IsSequence(), ErrorCode::config, where + ".disturbances: expected a list");
    std::vector<DisturbanceInterval> ivs;
    for (std::size_t i = 0; i < dist.size(); ++i) {
      const std::string w = where + ".disturbances[" + std::to_string(i) + "]";
      check_keys(dist[i], w, {"channel", "start", "end", "value"});
      DisturbanceInterval iv;
      std::string ch = "input";
      read(dist[i], "channel", w, &ch);
      iv.channel = parse_channel(ch, w);
      read(dist[i], "start", w, &iv.t_start);
      read(dist[i], "end", w, &iv.t_end);
      read(dist[i], "value", w, &iv.value);
      ivs.push_back(iv);
    }
    try {
      s.disturbance = DisturbanceSchedule(std::move(ivs));
    } catch (const Error& e) {
      fail(ErrorCode::config, where + ": " + e.what());
    }
  }
  if (const auto ctl = node["controllers"]) {
    require(ctl.IsSequence(), ErrorCode::config, where + ".controllers: expected a list");
    s.controllers.clear();
    for (const auto& c : ctl) s.controllers.push_back(parse_kind(c.as<std::string>(), where));
  }
  require(!s.controllers.empty(), ErrorCode::config,
          where + ": scenario lists no controllers");
  return s;
}

template <typename F>
void rethrow_as_config(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::config) throw;
    fail(ErrorCode::config, e.what());
  }
}

}  // namespace

void RunConfig::sync_horizons() {
  experiment.kdpc.t_ini = experiment.nmpc.t_ini = t_ini;
  experiment.kdpc.n_horizon = experiment.nmpc.n_horizon = n_horizon;
}

void RunConfig::validate() const {
  rethrow_as_config([&] {
    plant.validate();
    require(t_ini > 0 && n_horizon > 0, ErrorCode::config, "t_ini and n_horizon must be > 0");
    collection.validate();
    fit.validate();
    experiment.kdpc.validate();
    experiment.nmpc.validate();
    require(experiment.nmpc_linearizations >= 1, ErrorCode::config,
            "nmpc.linearizations must be >= 1");
    require(experiment.qp.tol > 0.0 && experiment.qp.max_iter > 0, ErrorCode::config,
            "qp.tol and qp.max_iter must be positive");
    require(experiment.steady_fraction > 0.0 && experiment.steady_fraction <= 1.0,
            ErrorCode::config, "metrics.steady_fraction must lie in (0, 1]");
    require(experiment.settle_band > 0.0, ErrorCode::config, "metrics.settle_band must be > 0");
    require(validation_runs >= 1, ErrorCode::config, "validation.runs must be >= 1");
    require(!scenarios.empty(), ErrorCode::config, "no scenarios configured");
    for (const auto& s : scenarios) s.validate();
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
      for (std::size_t j = i + 1; j < scenarios.size(); ++j) {
        require(scenarios[i].name != scenarios[j].name, ErrorCode::config,
                "duplicate scenario name '" + scenarios[i].name + "'");
      }
    }
  });
}

RunConfig default_config() {
  RunConfig c;
  c.scenarios.push_back(default_scenario("input_disturbance", Channel::input));
  c.scenarios.push_back(default_scenario("output_disturbance", Channel::output));
  c.sync_horizons();
  return c;
}

RunConfig parse_config(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    fail(ErrorCode::config, std::string("config is not valid YAML: ") + e.what());
  }
  RunConfig c = default_config();
  if (!root || root.IsNull()) {
    c.validate();
    return c;
  }
  check_keys(root, "config",
             {"seed", "output", "plant", "data", "validation", "predictor", "controller", "nmpc",
              "qp", "metrics", "scenarios"});
  read(root, "seed", "config", &c.seed);
  read(root, "output", "config", &c.output_dir);

  if (const auto n = root["plant"]) {
    check_keys(n, "plant", {"mu", "ts"});
    read(n, "mu", "plant", &c.plant.mu_vdp);
    read(n, "ts", "plant", &c.plant.ts);
  }
  if (const auto n = root["data"]) {
    const std::string w = "data";
    check_keys(n, w,
               {"t_ini", "n_horizon", "mode", "runs", "run_length", "amplitude", "hold_steps",
                "x1_range", "x2_spread", "input_spread", "equilibrium_fraction",
                "equilibrium_levels", "stride", "pe_warn_threshold"});
    read_index(n, "t_ini", w, &c.t_ini);
    read_index(n, "n_horizon", w, &c.n_horizon);
    auto& col = c.collection;
    if (n["mode"]) {
      std::string mode;
      read(n, "mode", w, &mode);
      if (mode == "increment_walk") {
        col.mode = ExcitationMode::increment_walk;
      } else if (mode == "level") {
        col.mode = ExcitationMode::level;
      } else {
        fail(ErrorCode::config, "data.mode must be 'increment_walk' or 'level'");
      }
    }
    read(n, "runs", w, &col.runs);
    read(n, "run_length", w, &col.run_length);
    read(n, "amplitude", w, &col.amplitude);
    read(n, "hold_steps", w, &col.hold_steps);
    if (n["x1_range"]) {
      std::vector<double> r;
      read(n, "x1_range", w, &r);
      require(r.size() == 2, ErrorCode::config, "data.x1_range must be [min, max]");
      col.x1_min = r[0];
      col.x1_max = r[1];
    }
    read(n, "x2_spread", w, &col.x2_spread);
    read(n, "input_spread", w, &col.input_spread);
    read(n, "equilibrium_fraction", w, &col.equilibrium_fraction);
    read(n, "equilibrium_levels", w, &col.equilibrium_levels);
    read(n, "stride", w, &col.stride);
    read(n, "pe_warn_threshold", w, &c.pe_warn_threshold);
  }
  if (const auto n = root["validation"]) {
    check_keys(n, "validation", {"runs"});
    read(n, "runs", "validation", &c.validation_runs);
  }
  if (const auto n = root["predictor"]) {
    const std::string w = "predictor";
    check_keys(n, w,
               {"bandwidth_past", "bandwidth_past_scale", "bandwidth_future",
                "bandwidth_future_scale", "lambda", "mu", "equilibrium_weight"});
    read_bandwidth(n, "bandwidth_past", w, &c.fit.bandwidth_past);
    read_bandwidth(n, "bandwidth_future", w, &c.fit.bandwidth_future);
    read(n, "bandwidth_past_scale", w, &c.fit.bandwidth_past_scale);
    read(n, "bandwidth_future_scale", w, &c.fit.bandwidth_future_scale);
    read(n, "lambda", w, &c.fit.lambda_reg);
    read(n, "mu", w, &c.fit.mu_reg);
    read(n, "equilibrium_weight", w, &c.fit.equilibrium_weight);
  }
  read_controller(root["controller"], "controller", &c.experiment.kdpc, nullptr);
  read_controller(root["nmpc"], "nmpc", &c.experiment.nmpc, &c.experiment.nmpc_linearizations);
  if (const auto n = root["qp"]) {
    const std::string w = "qp";
    check_keys(n, w,
               {"tol", "max_iter", "rho", "sigma", "alpha", "polish", "adaptive_rho",
                "check_every"});
    auto& q = c.experiment.qp;
    read(n, "tol", w, &q.tol);
    read(n, "max_iter", w, &q.max_iter);
    read(n, "rho", w, &q.rho);
    read(n, "sigma", w, &q.sigma);
    read(n, "alpha", w, &q.alpha);
    read(n, "polish", w, &q.polish);
    read(n, "adaptive_rho", w, &q.adaptive_rho);
    read(n, "check_every", w, &q.check_every);
  }
  if (const auto n = root["metrics"]) {
    check_keys(n, "metrics", {"steady_fraction", "settle_band"});
    read(n, "steady_fraction", "metrics", &c.experiment.steady_fraction);
    read(n, "settle_band", "metrics", &c.experiment.settle_band);
  }
  if (const auto n = root["scenarios"]) {
    require(n.IsSequence(), ErrorCode::config, "scenarios: expected a list");
    c.scenarios.clear();
    for (std::size_t i = 0; i < n.size(); ++i) {
      c.scenarios.push_back(read_scenario(n[i], "scenarios[" + std::to_string(i) + "]"));
    }
  }
  c.sync_horizons();
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::io, "cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

namespace {

void emit_controller(YAML::Emitter& out, const ControllerConfig& c, const int* lin) {
  out << YAML::BeginMap;
  out << YAML::Key << "q" << YAML::Value << c.q;
  out << YAML::Key << "r" << YAML::Value << c.r;
  out << YAML::Key << "lambda_y" << YAML::Value << c.lambda_y;
  out << YAML::Key << "sigma_bar" << YAML::Value << c.sigma_bar;
  out << YAML::Key << "du_min" << YAML::Value << c.du_min;
  out << YAML::Key << "du_max" << YAML::Value << c.du_max;
  out << YAML::Key << "y_min" << YAML::Value << c.y_min;
  out << YAML::Key << "y_max" << YAML::Value << c.y_max;
  if (lin != nullptr) out << YAML::Key << "linearizations" << YAML::Value << *lin;
  out << YAML::EndMap;
}

}  // namespace

std::string to_yaml(const RunConfig& c) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "seed" << YAML::Value << c.seed;
  out << YAML::Key << "output" << YAML::Value << c.output_dir;

  out << YAML::Key << "plant" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "mu" << YAML::Value << c.plant.mu_vdp;
  out << YAML::Key << "ts" << YAML::Value << c.plant.ts;
  out << YAML::EndMap;

  const auto& col = c.collection;
  out << YAML::Key << "data" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "t_ini" << YAML::Value << static_cast<long long>(c.t_ini);
  out << YAML::Key << "n_horizon" << YAML::Value << static_cast<long long>(c.n_horizon);
  out << YAML::Key << "mode" << YAML::Value
      << (col.mode == ExcitationMode::level ? "level" : "increment_walk");
  out << YAML::Key << "runs" << YAML::Value << col.runs;
  out << YAML::Key << "run_length" << YAML::Value << col.run_length;
  out << YAML::Key << "amplitude" << YAML::Value << col.amplitude;
  out << YAML::Key << "hold_steps" << YAML::Value << col.hold_steps;
  out << YAML::Key << "x1_range" << YAML::Value << YAML::Flow << YAML::BeginSeq << col.x1_min
      << col.x1_max << YAML::EndSeq;
  out << YAML::Key << "x2_spread" << YAML::Value << col.x2_spread;
  out << YAML::Key << "input_spread" << YAML::Value << col.input_spread;
  out << YAML::Key << "equilibrium_fraction" << YAML::Value << col.equilibrium_fraction;
  out << YAML::Key << "equilibrium_levels" << YAML::Value << YAML::Flow
      << col.equilibrium_levels;
  out << YAML::Key << "stride" << YAML::Value << col.stride;
  out << YAML::Key << "pe_warn_threshold" << YAML::Value << c.pe_warn_threshold;
  out << YAML::EndMap;

  out << YAML::Key << "validation" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "runs" << YAML::Value << c.validation_runs;
  out << YAML::EndMap;

  auto bw = [&](double v) {
    if (v > 0.0) {
      out << v;
    } else {
      out << "median";
    }
  };
  out << YAML::Key << "predictor" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "bandwidth_past" << YAML::Value;
  bw(c.fit.bandwidth_past);
  out << YAML::Key << "bandwidth_past_scale" << YAML::Value << c.fit.bandwidth_past_scale;
  out << YAML::Key << "bandwidth_future" << YAML::Value;
  bw(c.fit.bandwidth_future);
  out << YAML::Key << "bandwidth_future_scale" << YAML::Value << c.fit.bandwidth_future_scale;
  out << YAML::Key << "lambda" << YAML::Value << c.fit.lambda_reg;
  out << YAML::Key << "mu" << YAML::Value << c.fit.mu_reg;
  out << YAML::Key << "equilibrium_weight" << YAML::Value << c.fit.equilibrium_weight;
  out << YAML::EndMap;

  out << YAML::Key << "controller" << YAML::Value;
  emit_controller(out, c.experiment.kdpc, nullptr);
  out << YAML::Key << "nmpc" << YAML::Value;
  emit_controller(out, c.experiment.nmpc, &c.experiment.nmpc_linearizations);

  const auto& q = c.experiment.qp;
  out << YAML::Key << "qp" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "tol" << YAML::Value << q.tol;
  out << YAML::Key << "max_iter" << YAML::Value << q.max_iter;
  out << YAML::Key << "rho" << YAML::Value << q.rho;
  out << YAML::Key << "sigma" << YAML::Value << q.sigma;
  out << YAML::Key << "alpha" << YAML::Value << q.alpha;
  out << YAML::Key << "polish" << YAML::Value << q.polish;
  out << YAML::Key << "adaptive_rho" << YAML::Value << q.adaptive_rho;
  out << YAML::Key << "check_every" << YAML::Value << q.check_every;
  out << YAML::EndMap;

  out << YAML::Key << "metrics" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "steady_fraction" << YAML::Value << c.experiment.steady_fraction;
  out << YAML::Key << "settle_band" << YAML::Value << c.experiment.settle_band;
  out << YAML::EndMap;

  out << YAML::Key << "scenarios" << YAML::Value << YAML::BeginSeq;
  for (const auto& s : c.scenarios) {
    out << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << s.name;
    out << YAML::Key << "duration" << YAML::Value << s.duration;
    out << YAML::Key << "seed" << YAML::Value << s.seed;
    out << YAML::Key << "reference" << YAML::Value << YAML::BeginSeq;
    for (const auto& [t, v] : s.reference.steps()) {
      out << YAML::Flow << YAML::BeginSeq << t << v << YAML::EndSeq;
    }
    out << YAML::EndSeq;
    out << YAML::Key << "disturbances" << YAML::Value << YAML::BeginSeq;
    for (const auto& iv : s.disturbance.intervals()) {
      out << YAML::Flow << YAML::BeginMap;
      out << YAML::Key << "channel" << YAML::Value
          << (iv.channel == Channel::input ? "input" : "output");
      out << YAML::Key << "start" << YAML::Value << iv.t_start;
      out << YAML::Key << "end" << YAML::Value << iv.t_end;
      out << YAML::Key << "value" << YAML::Value << iv.value;
      out << YAML::EndMap;
    }
    out << YAML::EndSeq;
    out << YAML::Key << "controllers" << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (const auto k : s.controllers) out << std::string(to_string(k));
    out << YAML::EndSeq;
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace kdpc
