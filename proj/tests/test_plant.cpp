#include "kdpc/error.hpp"
#include "kdpc/plant.hpp"

#include <gtest/gtest.h>

#include <random>
#include <vector>

using namespace kdpc;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected kdpc::Error";
  return ErrorCode::invalid_argument;
}

}  // namespace

// Hand-evaluated Euler steps with mu = 1, ts = 0.05.
TEST(VdpStep, MatchesHandComputedSteps) {
  const VdpParams p{1.0, 0.05};
  const PlantState a = vdp_step({1.0, 0.0}, 0.0, 0.0, p);
  EXPECT_DOUBLE_EQ(a.x1, 1.0);
  EXPECT_DOUBLE_EQ(a.x2, -0.05);

  // x2' = 1 + 0.05 * (1 - 0) * 1 = 1.05
  const PlantState b = vdp_step({0.0, 1.0}, 0.0, 0.0, p);
  EXPECT_DOUBLE_EQ(b.x1, 0.05);
  EXPECT_DOUBLE_EQ(b.x2, 1.05);

  // input adds ts * u to x2
  const PlantState c = vdp_step({0.0, 0.0}, 2.0, 0.0, p);
  EXPECT_DOUBLE_EQ(c.x1, 0.0);
  EXPECT_DOUBLE_EQ(c.x2, 0.1);
}

TEST(VdpStep, InputDisturbanceSharesTheInputColumn) {
  const VdpParams p{1.0, 0.05};
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int i = 0; i < 50; ++i) {
    const PlantState x{u(rng), u(rng)};
    const double v = u(rng), d = u(rng);
    const PlantState a = vdp_step(x, v, d, p);
    const PlantState b = vdp_step(x, v + d, 0.0, p);
    EXPECT_NEAR(a.x1, b.x1, 1e-15);
    EXPECT_NEAR(a.x2, b.x2, 1e-15);
  }
}

TEST(VdpStep, OriginIsAFixedPoint) {
  const VdpParams p{1.0, 0.05};
  PlantState x{0.0, 0.0};
  for (int k = 0; k < 1000; ++k) {
    x = vdp_step(x, 0.0, 0.0, p);
    ASSERT_EQ(x.x1, 0.0);
    ASSERT_EQ(x.x2, 0.0);
  }
}

TEST(VdpStep, NonFiniteStateIsReportedAsDivergence) {
  const VdpParams p{1.0, 0.05};
  EXPECT_EQ(code_of([&] { vdp_step({1e200, 1e200}, 0.0, 0.0, p); }), ErrorCode::diverged);
}

TEST(VdpParams, RejectsNonPositiveSamplingTime) {
  EXPECT_EQ(code_of([] { VdpParams{1.0, 0.0}.validate(); }), ErrorCode::invalid_argument);
  EXPECT_EQ(code_of([] { VdpParams{1.0, -0.1}.validate(); }), ErrorCode::invalid_argument);
}

TEST(Measure, AddsOutputDisturbance) {
  EXPECT_DOUBLE_EQ(measure({0.3, 9.0}, 0.2), 0.5);
}

TEST(DisturbanceSchedule, IntervalsAreHalfOpen) {
  const DisturbanceSchedule s({{10.0, 20.0, 0.2, Channel::input}});
  EXPECT_EQ(s.value_at(9.95, Channel::input), 0.0);
  EXPECT_EQ(s.value_at(10.0, Channel::input), 0.2);
  EXPECT_EQ(s.value_at(200 * 0.05, Channel::input), 0.2);  // 10.000000000000002
  EXPECT_EQ(s.value_at(19.95, Channel::input), 0.2);
  EXPECT_EQ(s.value_at(20.0, Channel::input), 0.0);
  EXPECT_EQ(s.value_at(15.0, Channel::output), 0.0);
}

TEST(DisturbanceSchedule, RejectsOverlapOnOneChannel) {
  EXPECT_EQ(code_of([] {
              DisturbanceSchedule({{0.0, 2.0, 1.0, Channel::input}, {1.0, 3.0, 1.0, Channel::input}});
            }),
            ErrorCode::invalid_argument);
  // different channels may overlap
  EXPECT_NO_THROW(
      DisturbanceSchedule({{0.0, 2.0, 1.0, Channel::input}, {1.0, 3.0, 1.0, Channel::output}}));
}

TEST(Simulate, OutputIsMeasuredAfterTheInput) {
  const VdpParams p{1.0, 0.05};
  const std::vector<double> u{1.0, 0.0, 0.0};
  const Trajectory tr = simulate({0.0, 0.0}, u, {}, p);
  ASSERT_EQ(tr.size(), 3u);
  EXPECT_EQ(tr.u, u);
  // x after u[0]: (0, 0.05); after u[1]: (0.0025, ...)
  EXPECT_DOUBLE_EQ(tr.y[0], 0.0);
  EXPECT_DOUBLE_EQ(tr.y[1], 0.0025);
}

TEST(Simulate, GenericPlantMatchesDirectStepping) {
  const VdpParams p{1.0, 0.05};
  const VanDerPolPlant plant(p);
  std::vector<double> u(200);
  for (std::size_t k = 0; k < u.size(); ++k) u[k] = std::sin(0.1 * static_cast<double>(k));
  const DisturbanceSchedule d({{2.0, 4.0, 0.3, Channel::input}, {3.0, 5.0, -0.1, Channel::output}});
  const Trajectory tr = simulate(plant, Eigen::Vector2d(0.5, -0.2), u, d);

  PlantState x{0.5, -0.2};
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double t = static_cast<double>(k) * p.ts;
    x = vdp_step(x, u[k], d.value_at(t, Channel::input), p);
    ASSERT_EQ(tr.y[k], measure(x, d.value_at(t + p.ts, Channel::output))) << "k=" << k;
  }
}

TEST(Simulate, RejectsWrongStateDimension) {
  const VanDerPolPlant plant;
  const std::vector<double> u{0.0};
  EXPECT_EQ(code_of([&] { simulate(plant, Eigen::Vector3d::Zero(), u, {}); }),
            ErrorCode::dimension_mismatch);
}
