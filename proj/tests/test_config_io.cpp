#include "kdpc/config.hpp"
#include "kdpc/error.hpp"
#include "kdpc/io.hpp"
#include "kdpc/plot.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <limits>
#include <random>

using namespace kdpc;

namespace {

ErrorCode parse_error(const std::string& yaml) {
  try {
    parse_config(yaml);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "accepted: " << yaml;
  return ErrorCode::invalid_argument;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() /
                     ("kdpc_test_" + name + "_" + std::to_string(::testing::UnitTest::GetInstance()
                                                                     ->random_seed()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST(Config, DefaultsAreValid) {
  const RunConfig c = default_config();
  EXPECT_NO_THROW(c.validate());
  ASSERT_EQ(c.scenarios.size(), 2u);
  EXPECT_EQ(c.t_ini, 10);
  EXPECT_EQ(c.n_horizon, 15);
  EXPECT_EQ(c.experiment.kdpc.t_ini, 10);
}

TEST(Config, YamlRoundTrip) {
  RunConfig c = default_config();
  c.seed = 17;
  c.fit.bandwidth_past = 2.5;
  c.experiment.kdpc.q = 0.1 + 0.2;  // not exactly representable in short form
  const std::string y = to_yaml(c);
  EXPECT_EQ(to_yaml(parse_config(y)), y);
}

TEST(Config, PartialFileKeepsDefaults) {
  const RunConfig c = parse_config("seed: 4\npredictor:\n  lambda: 0.01\n");
  EXPECT_EQ(c.seed, 4u);
  EXPECT_EQ(c.fit.lambda_reg, 0.01);
  EXPECT_EQ(c.fit.mu_reg, FitConfig{}.mu_reg);
  EXPECT_EQ(c.scenarios.size(), 2u);
}

TEST(Config, HorizonsPropagateToControllers) {
  const RunConfig c = parse_config("data:\n  t_ini: 4\n  n_horizon: 6\n");
  EXPECT_EQ(c.experiment.kdpc.t_ini, 4);
  EXPECT_EQ(c.experiment.nmpc.n_horizon, 6);
}

TEST(Config, RejectsUnknownKeys) {
  EXPECT_EQ(parse_error("sed: 1\n"), ErrorCode::config);
  EXPECT_EQ(parse_error("plant:\n  mu: 1\n  tss: 0.1\n"), ErrorCode::config);
  EXPECT_EQ(parse_error("scenarios:\n  - name: a\n    color: red\n"), ErrorCode::config);
}

TEST(Config, RejectsInvalidValues) {
  EXPECT_EQ(parse_error("predictor:\n  lambda: 0\n"), ErrorCode::config);
  EXPECT_EQ(parse_error("predictor:\n  bandwidth_past: mean\n"), ErrorCode::config);
  EXPECT_EQ(parse_error("plant:\n  ts: abc\n"), ErrorCode::config);
  EXPECT_EQ(parse_error("scenarios: []\n"), ErrorCode::config);
  EXPECT_EQ(parse_error("scenarios:\n  - name: a\n    controllers: []\n"), ErrorCode::config);
  EXPECT_EQ(parse_error("scenarios:\n  - name: a\n    controllers: [lqr]\n"), ErrorCode::config);
  EXPECT_EQ(parse_error("controller:\n  du_min: 1\n  du_max: 0\n"), ErrorCode::config);
  EXPECT_EQ(parse_error("data:\n  mode: chirp\n"), ErrorCode::config);
  EXPECT_EQ(parse_error("[1, 2]\n"), ErrorCode::config);
}

TEST(Config, ScenarioParsing) {
  const RunConfig c = parse_config(R"(scenarios:
  - name: custom
    duration: 12
    reference: [[2, 0.5], [6, -0.5]]
    disturbances:
      - {channel: output, start: 3, end: 4, value: 0.1}
    controllers: [nmpc]
)");
  ASSERT_EQ(c.scenarios.size(), 1u);
  const Scenario& s = c.scenarios[0];
  EXPECT_EQ(s.name, "custom");
  EXPECT_EQ(s.duration, 12.0);
  EXPECT_EQ(s.reference.value_at(7.0), -0.5);
  EXPECT_EQ(s.disturbance.value_at(3.5, Channel::output), 0.1);
  ASSERT_EQ(s.controllers.size(), 1u);
  EXPECT_EQ(s.controllers[0], ControllerKind::nmpc);
}

TEST(Io, Sha256KnownDigest) {
  EXPECT_EQ(sha256_hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Io, CsvRoundTripIsExact) {
  const fs::path dir = scratch("csv");
  std::mt19937 rng(8);
  Eigen::MatrixXd m = oracle::random_matrix(rng, 7, 5, -1e3, 1e3);
  m(0, 0) = 1e-300;
  m(1, 1) = -0.1;
  m(2, 2) = 0.0;
  m(3, 3) = std::numeric_limits<double>::max();
  write_matrix_csv(dir / "m.csv", m);
  EXPECT_EQ(read_matrix_csv(dir / "m.csv"), m);
  fs::remove_all(dir);
}

TEST(Io, MalformedCsvIsAnIoError) {
  const fs::path dir = scratch("badcsv");
  write_text(dir / "bad.csv", "1,2\n3\n");
  try {
    read_matrix_csv(dir / "bad.csv");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::io);
  }
  EXPECT_THROW(read_matrix_csv(dir / "missing.csv"), Error);
  fs::remove_all(dir);
}

TEST(Io, DatasetAndPredictorRoundTrip) {
  const fs::path dir = scratch("artifacts");
  CollectionConfig cfg;
  cfg.runs = 60;
  const auto trs = collect_trajectories(cfg, {}, 3, 4, 1);
  const Dataset d = assemble_dataset(trs, 3, 4);
  save_dataset(dir / "ds", d);
  const Dataset e = load_dataset(dir / "ds");
  EXPECT_EQ(e.d_ini, d.d_ini);
  EXPECT_EQ(e.y_f, d.y_f);
  EXPECT_EQ(e.t_ini, 3);

  Predictors p = fit_predictors(d, {});
  p.dataset_hash = dataset_hash(dir / "ds");
  save_predictors(dir / "pr", p);
  const Predictors q = load_predictors(dir / "pr");
  EXPECT_EQ(q.p1, p.p1);
  EXPECT_EQ(q.p2, p.p2);
  EXPECT_EQ(q.kernel_past.bandwidth, p.kernel_past.bandwidth);
  EXPECT_EQ(q.lambda_reg, p.lambda_reg);
  EXPECT_EQ(q.dataset_hash, p.dataset_hash);

  // Saving again gives the same hash.
  const std::string h = predictors_hash(dir / "pr");
  save_predictors(dir / "pr2", q);
  EXPECT_EQ(predictors_hash(dir / "pr2"), h);
  fs::remove_all(dir);
}

TEST(Io, TraceCsvHeader) {
  const fs::path dir = scratch("trace");
  ControllerTrace tr;
  tr.t = {0.0};
  tr.y = {1.0};
  tr.y_ref = {1.0};
  tr.u = {0.5};
  tr.delta_u = {0.0};
  tr.d_in = {0.2};
  tr.d_out = {0.0};
  tr.cost = {3.0};
  tr.slack = {0.0};
  tr.kkt = {1e-12};
  tr.status = {StepStatus::optimal};
  write_trace_csv(dir / "t.csv", tr);
  const std::string s = read_text(dir / "t.csv");
  EXPECT_EQ(s.substr(0, s.find('\n')), "t,y,y_ref,u,delta_u,d,cost,status,slack,kkt_residual");
  EXPECT_NE(s.find(",optimal,"), std::string::npos);
  fs::remove_all(dir);
}

TEST(Plot, SvgHasOnePolylinePerSeries) {
  PlotPanel a{"y", {{"one", {0, 1, 2}, {0, 1, 0}, "#000000", false},
                    {"two", {0, 1, 2}, {1, 1, 1}, "#ff0000", true}}};
  PlotPanel b{"u", {{"three", {0, 2}, {-1, 1}, "#00ff00", false}}};
  const std::string svg = render_svg("title & <test>", "time", {a, b});
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  std::size_t count = 0;
  for (std::size_t pos = 0; (pos = svg.find("<polyline", pos)) != std::string::npos; ++pos) {
    ++count;
  }
  EXPECT_EQ(count, 3u);
  EXPECT_NE(svg.find("title &amp; &lt;test&gt;"), std::string::npos);
}

TEST(Config, ShippedDefaultFileMatchesBuiltInDefaults) {
  const RunConfig c = load_config(fs::path(KDPC_SOURCE_DIR) / "configs" / "default.yaml");
  EXPECT_EQ(to_yaml(c), to_yaml(default_config()));
}
