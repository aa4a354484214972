// Uses nothing but the public C header.
#include "kdpc/kdpc.h"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

const char* kSmallConfig = R"(seed: 3
data:
  runs: 300
validation:
  runs: 20
scenarios:
  - name: short
    duration: 12
    reference: [[2, 0.5]]
    disturbances:
      - {channel: input, start: 6, end: 9, value: 0.2}
)";

struct Config {
  kdpc_config* p = nullptr;
  ~Config() { kdpc_config_free(p); }
};

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("kdpc_capi_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void collect_lines(const char* line, void* user) {
  static_cast<std::vector<std::string>*>(user)->emplace_back(line);
}

}  // namespace

TEST(CApi, VersionAndStatusStrings) {
  EXPECT_STRNE(kdpc_version(), "");
  EXPECT_STREQ(kdpc_status_string(KDPC_OK), "ok");
  EXPECT_STREQ(kdpc_status_string(KDPC_ERR_PE), "insufficient excitation");
}

TEST(CApi, NullArgumentsAreRejected) {
  EXPECT_EQ(kdpc_config_default(nullptr), KDPC_ERR_INVALID_ARGUMENT);
  EXPECT_STRNE(kdpc_last_error(), "");
  EXPECT_EQ(kdpc_collect(nullptr, "x"), KDPC_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(kdpc_predict(nullptr, nullptr, nullptr, nullptr), KDPC_ERR_INVALID_ARGUMENT);
  kdpc_config_free(nullptr);
  kdpc_predictors_free(nullptr);
  kdpc_controller_free(nullptr);
}

TEST(CApi, ConfigErrorsCarryAMessage) {
  Config c;
  EXPECT_EQ(kdpc_config_parse("bogus_key: 1\n", &c.p), KDPC_ERR_CONFIG);
  EXPECT_NE(std::string(kdpc_last_error()).find("bogus_key"), std::string::npos);
  EXPECT_EQ(c.p, nullptr);
  EXPECT_EQ(kdpc_config_load("/nonexistent/kdpc.yaml", &c.p), KDPC_ERR_IO);
}

TEST(CApi, ConfigYamlBuffer) {
  Config c;
  ASSERT_EQ(kdpc_config_default(&c.p), KDPC_OK);
  ASSERT_EQ(kdpc_config_set_seed(c.p, 99), KDPC_OK);
  ASSERT_EQ(kdpc_config_set_output(c.p, "somewhere"), KDPC_OK);
  EXPECT_STREQ(kdpc_config_output(c.p), "somewhere");
  std::size_t need = 0;
  ASSERT_EQ(kdpc_config_to_yaml(c.p, nullptr, 0, &need), KDPC_OK);
  ASSERT_GT(need, 1u);
  std::string buf(need, '\0');
  ASSERT_EQ(kdpc_config_to_yaml(c.p, buf.data(), buf.size(), nullptr), KDPC_OK);
  EXPECT_EQ(std::strlen(buf.c_str()), need - 1);
  EXPECT_NE(buf.find("seed: 99"), std::string::npos);

  char tiny[4];
  ASSERT_EQ(kdpc_config_to_yaml(c.p, tiny, sizeof tiny, nullptr), KDPC_OK);
  EXPECT_EQ(std::strlen(tiny), 3u);
}

TEST(CApi, QpSolve) {
  // min 0.5 (z0^2 + z1^2) - 2 z0 - 2 z1,  z0 <= 1,  z0 + z1 <= 1.5
  const double h[] = {1.0, 0.0, 0.0, 1.0};
  const double g[] = {-2.0, -2.0};
  const double a[] = {1.0, 1.0};
  const double b[] = {1.5};
  const double inf = INFINITY;
  const double lb[] = {-inf, -inf};
  const double ub[] = {1.0, inf};
  double z[2];
  double obj = 0.0;
  kdpc_qp_status st = KDPC_QP_MAX_ITER;
  ASSERT_EQ(kdpc_qp_solve(2, 1, h, g, a, b, lb, ub, 1e-9, 0, z, &obj, &st), KDPC_OK);
  EXPECT_EQ(st, KDPC_QP_OPTIMAL);
  EXPECT_NEAR(z[0], 0.75, 1e-7);
  EXPECT_NEAR(z[1], 0.75, 1e-7);
  EXPECT_NEAR(obj, 0.5625 - 3.0, 1e-7);

  const double bad_h[] = {NAN, 0.0, 0.0, 1.0};
  EXPECT_EQ(kdpc_qp_solve(2, 0, bad_h, g, nullptr, nullptr, nullptr, nullptr, 0, 0, z, nullptr,
                          nullptr),
            KDPC_ERR_INVALID_ARGUMENT);
}

TEST(CApi, PipelineRoundTrip) {
  const fs::path root = scratch("pipeline");
  Config c;
  ASSERT_EQ(kdpc_config_parse(kSmallConfig, &c.p), KDPC_OK) << kdpc_last_error();

  std::vector<std::string> lines;
  kdpc_set_log(collect_lines, &lines);
  ASSERT_EQ(kdpc_collect(c.p, (root / "dataset").c_str()), KDPC_OK) << kdpc_last_error();
  ASSERT_EQ(kdpc_fit(c.p, (root / "dataset").c_str(), (root / "predictors").c_str()), KDPC_OK)
      << kdpc_last_error();
  ASSERT_EQ(kdpc_run(c.p, (root / "predictors").c_str(), (root / "results").c_str(), 1), KDPC_OK)
      << kdpc_last_error();
  kdpc_set_log(nullptr, nullptr);

  ASSERT_FALSE(lines.empty());
  EXPECT_EQ(lines[0].rfind("collected", 0), 0u);
  for (const char* f : {"dataset/manifest.json", "predictors/manifest.json", "predictors/p1.csv",
                        "results/manifest.json", "results/metrics.json",
                        "results/short/kdpc.csv", "results/short/nmpc.csv",
                        "results/short/plot.svg"}) {
    EXPECT_TRUE(fs::exists(root / f)) << f;
  }
  const std::string metrics = slurp(root / "results/metrics.json");
  EXPECT_NE(metrics.find("\"kdpc\""), std::string::npos);
  EXPECT_NE(metrics.find("\"nmpc\""), std::string::npos);

  // Handles: predictor and controller.
  kdpc_predictors* p = nullptr;
  ASSERT_EQ(kdpc_predictors_load((root / "predictors").c_str(), &p), KDPC_OK);
  std::size_t t_ini = 0, n = 0, cols = 0;
  ASSERT_EQ(kdpc_predictors_dims(p, &t_ini, &n, &cols), KDPC_OK);
  EXPECT_EQ(t_ini, 10u);
  EXPECT_EQ(n, 15u);
  EXPECT_EQ(cols, 305u);
  std::vector<double> z(2 * t_ini, 0.0), du(n, 0.0), y(n, 1.0);
  ASSERT_EQ(kdpc_predict(p, z.data(), du.data(), y.data()), KDPC_OK);
  for (double v : y) EXPECT_LE(std::abs(v), 1e-3);

  kdpc_controller* ctrl = nullptr;
  ASSERT_EQ(kdpc_controller_create(p, c.p, 0.0, &ctrl), KDPC_OK);
  kdpc_predictors_free(p);  // the controller keeps its own reference
  std::vector<double> ref(n, 0.0);
  kdpc_step_status st = KDPC_STEP_OPTIMAL;
  double u = 1.0;
  ASSERT_EQ(kdpc_controller_step(ctrl, 0.0, ref.data(), &u, &st), KDPC_OK);
  EXPECT_EQ(st, KDPC_STEP_WARMUP);
  EXPECT_EQ(u, 0.0);
  for (int k = 0; k < 12; ++k) {
    ASSERT_EQ(kdpc_controller_step(ctrl, 0.0, ref.data(), &u, &st), KDPC_OK);
  }
  EXPECT_EQ(st, KDPC_STEP_OPTIMAL);
  EXPECT_LE(std::abs(u), 1e-3);
  EXPECT_EQ(kdpc_controller_step(ctrl, NAN, ref.data(), &u, &st), KDPC_ERR_INVALID_ARGUMENT);
  kdpc_controller_free(ctrl);
  fs::remove_all(root);
}

TEST(CApi, StageErrors) {
  const fs::path root = scratch("errors");
  Config c;
  ASSERT_EQ(kdpc_config_parse(kSmallConfig, &c.p), KDPC_OK);
  kdpc_set_log([](const char*, void*) {}, nullptr);
  EXPECT_EQ(kdpc_run(c.p, (root / "nothing").c_str(), (root / "out").c_str(), 0), KDPC_ERR_IO);
  EXPECT_EQ(kdpc_fit(c.p, (root / "nothing").c_str(), (root / "out").c_str()), KDPC_ERR_IO);

  // Identical runs give a singular Gram matrix.
  Config dup;
  ASSERT_EQ(kdpc_config_parse(R"(data:
  runs: 4
  x1_range: [0.2, 0.2]
  amplitude: 0
  equilibrium_fraction: 1
  equilibrium_levels: []
)",
                              &dup.p),
            KDPC_OK);
  EXPECT_EQ(kdpc_collect(dup.p, (root / "dup").c_str()), KDPC_ERR_PE);

  // Dataset built for other horizons.
  ASSERT_EQ(kdpc_collect(c.p, (root / "dataset").c_str()), KDPC_OK);
  Config other;
  ASSERT_EQ(kdpc_config_parse("data:\n  t_ini: 5\n", &other.p), KDPC_OK);
  EXPECT_EQ(kdpc_fit(other.p, (root / "dataset").c_str(), (root / "p").c_str()), KDPC_ERR_CONFIG);
  kdpc_set_log(nullptr, nullptr);
  fs::remove_all(root);
}

TEST(CApi, DivergenceIsReportedAfterWritingResults) {
  const fs::path root = scratch("diverge");
  Config c;
  ASSERT_EQ(kdpc_config_parse(R"(scenarios:
  - name: blowup
    duration: 3
    disturbances:
      - {channel: input, start: 1, end: 3, value: 1.0e8}
    controllers: [nmpc]
)",
                              &c.p),
            KDPC_OK);
  kdpc_set_log([](const char*, void*) {}, nullptr);
  EXPECT_EQ(kdpc_run(c.p, (root / "none").c_str(), (root / "out").c_str(), 0), KDPC_ERR_DIVERGED);
  kdpc_set_log(nullptr, nullptr);
  EXPECT_NE(std::string(kdpc_last_error()).find("blowup/nmpc"), std::string::npos);
  EXPECT_TRUE(fs::exists(root / "out/blowup/nmpc.csv"));
  fs::remove_all(root);
}
