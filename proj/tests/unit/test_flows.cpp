#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "driftscope/flows.hpp"

using namespace driftscope;
using std::numbers::pi;

namespace {

std::vector<double> vel(const FlowSpec& f, std::vector<double> x, double t) { return evaluate_velocity(f, x, t); }

}  // namespace

TEST(Flows, ParsesNames) {
  EXPECT_EQ(parse_flow_id("double-gyre"), FlowId::double_gyre);
  EXPECT_EQ(parse_flow_id("abc"), FlowId::abc);
  EXPECT_EQ(parse_flow_id("four-centers"), FlowId::four_centers);
  EXPECT_EQ(parse_flow_id("sine-ridge"), FlowId::sine_ridge);
  EXPECT_THROW(parse_flow_id("spiral-focus"), ConfigError);
}

TEST(DoubleGyre, CornerIsStagnant) {
  const auto v = vel(make_flow(FlowId::double_gyre), {0, 0}, 0);
  EXPECT_EQ(v[0], 0.0);
  EXPECT_EQ(v[1], 0.0);
}

TEST(DoubleGyre, ClosedFormAtT0) {
  // At t=0 the forcing vanishes, so f(x) = x.
  const auto v = vel(make_flow(FlowId::double_gyre), {0.5, 0.25}, 0);
  EXPECT_NEAR(v[0], -0.1 * pi * std::sin(pi / 2) * std::cos(pi / 4), 1e-15);
  EXPECT_NEAR(v[0], -0.22214, 5e-6);
  EXPECT_NEAR(v[1], 0.0, 1e-15);
}

TEST(DoubleGyre, MatchesStreamFunctionDerivatives) {
  // v = (-dpsi/dy, dpsi/dx) with psi = A sin(pi f(x,t)) sin(pi y).
  const auto flow = make_flow(FlowId::double_gyre);
  auto psi = [](double x, double y, double t) {
    const double a = 0.1 * std::sin(pi / 5 * t), b = 1 - 2 * a;
    return 0.1 * std::sin(pi * (a * x * x + b * x)) * std::sin(pi * y);
  };
  const double h = 1e-6;
  for (double t : {0.0, 1.3, 4.0})
    for (double x : {0.2, 0.9, 1.7})
      for (double y : {0.1, 0.6}) {
        const auto v = vel(flow, {x, y}, t);
        EXPECT_NEAR(v[0], -(psi(x, y + h, t) - psi(x, y - h, t)) / (2 * h), 1e-8);
        EXPECT_NEAR(v[1], (psi(x + h, y, t) - psi(x - h, y, t)) / (2 * h), 1e-8);
      }
}

TEST(Abc, OriginGivesCAB) {
  const auto flow = make_flow(FlowId::abc);
  for (double t : {0.0, 3.0, -7.5}) {
    const auto v = vel(flow, {0, 0, 0}, t);
    EXPECT_DOUBLE_EQ(v[0], flow.abc.C);
    EXPECT_DOUBLE_EQ(v[1], flow.abc.A);
    EXPECT_DOUBLE_EQ(v[2], flow.abc.B);
  }
}

TEST(FourCenters, OriginIsFixedInBothForms) {
  for (auto form : {FourCentersForm::vortex, FourCentersForm::printed}) {
    auto flow = make_flow(FlowId::four_centers, {3, 3});
    flow.four_centers.form = form;
    flow.grid.lower = {-1, -1};
    flow.grid.upper = {1, 1};
    flow.steps = 20;
    const auto ds = integrate_flow(flow);
    // Seed 4 is the lattice center.
    for (std::size_t k = 0; k < ds.steps(); ++k) {
      EXPECT_EQ(ds.position(4, k)[0], 0.0);
      EXPECT_EQ(ds.position(4, k)[1], 0.0);
    }
  }
}

TEST(FourCenters, VortexFormIsHamiltonian) {
  // psi = x y exp(-x^2 - y^2); v = (dpsi/dy, -dpsi/dx).
  const auto flow = make_flow(FlowId::four_centers);
  auto psi = [](double x, double y) { return x * y * std::exp(-x * x - y * y); };
  const double h = 1e-6;
  for (double x : {-1.3, -0.4, 0.7, 1.1})
    for (double y : {-0.9, 0.2, 1.5}) {
      const auto v = vel(flow, {x, y}, 0);
      EXPECT_NEAR(v[0], (psi(x, y + h) - psi(x, y - h)) / (2 * h), 1e-8);
      EXPECT_NEAR(v[1], -(psi(x + h, y) - psi(x - h, y)) / (2 * h), 1e-8);
    }
}

TEST(FourCenters, QuadrantCentersAreStagnationPoints) {
  auto flow = make_flow(FlowId::four_centers);
  const double c = 1 / std::sqrt(2.0);
  for (auto form : {FourCentersForm::vortex, FourCentersForm::printed}) {
    flow.four_centers.form = form;
    for (double sx : {-1.0, 1.0})
      for (double sy : {-1.0, 1.0}) {
        const auto v = vel(flow, {sx * c, sy * c}, 0);
        EXPECT_NEAR(v[0], 0.0, 1e-15);
        EXPECT_NEAR(v[1], 0.0, 1e-15);
      }
  }
}

TEST(FourCenters, PrintedFormFlipsOnlyTheSecondComponent) {
  auto vortex = make_flow(FlowId::four_centers);
  auto printed = vortex;
  printed.four_centers.form = FourCentersForm::printed;
  const auto a = vel(vortex, {0.3, -1.2}, 0), b = vel(printed, {0.3, -1.2}, 0);
  EXPECT_EQ(a[0], b[0]);
  EXPECT_EQ(a[1], -b[1]);
  const double x = 0.3, y = -1.2, g = std::exp(-x * x - y * y);
  EXPECT_DOUBLE_EQ(b[0], -x * g * (2 * y * y - 1));
  EXPECT_DOUBLE_EQ(b[1], -y * g * (2 * x * x - 1));
}

TEST(SineRidge, AxisAndUnitColumnsOnlyTranslate) {
  const auto flow = make_flow(FlowId::sine_ridge);
  for (double y : {-3.0, 0.5, 2.0})
    for (double t : {0.0, 0.4, 1.0}) {
      const auto a = evaluate_flow_map(flow, std::vector<double>{0, y}, t);
      EXPECT_EQ(a[0], 0.0);
      EXPECT_DOUBLE_EQ(a[1], y + t);
      const auto b = evaluate_flow_map(flow, std::vector<double>{1, y}, t);
      EXPECT_DOUBLE_EQ(b[0], 1.0);
      EXPECT_DOUBLE_EQ(b[1], y + t);
    }
}

TEST(SineRidge, ClosedFormAtMidColumn) {
  // p(0) by linear interpolation between (-4, 0.05) and (4, 4).
  const double p0 = 0.05 + (0.0 - -4.0) * (4.0 - 0.05) / 8.0;
  EXPECT_DOUBLE_EQ(p0, 2.025);
  const double expected = 0.5 / std::sqrt(0.25 + 0.75 * std::exp(-2.0 * p0));
  const auto p = evaluate_flow_map(make_flow(FlowId::sine_ridge), std::vector<double>{0.5, 0}, 1.0);
  EXPECT_NEAR(p[0], expected, 1e-15);
  EXPECT_NEAR(p[0], 0.97485, 5e-6);
  EXPECT_DOUBLE_EQ(p[1], 1.0);
}

TEST(SineRidge, GeneratedTrajectoriesUseTheFlowMap) {
  auto flow = make_flow(FlowId::sine_ridge, {5, 4});
  flow.steps = 6;
  const auto ds = integrate_flow(flow);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto s = flow.grid.seed(i);
    for (std::size_t k = 0; k < ds.steps(); ++k) {
      const auto p = evaluate_flow_map(flow, std::vector<double>{s[0], s[1]}, ds.times()[k] - flow.t1);
      EXPECT_DOUBLE_EQ(ds.position(i, k)[0], p[0]);
      EXPECT_DOUBLE_EQ(ds.position(i, k)[1], p[1]);
    }
  }
}

TEST(Flows, KindMismatchIsRejected) {
  EXPECT_THROW(evaluate_velocity(make_flow(FlowId::sine_ridge), std::vector<double>{0, 0}, 0), FlowKindError);
  EXPECT_THROW(evaluate_flow_map(make_flow(FlowId::abc), std::vector<double>{0, 0, 0}, 0), FlowKindError);
  EXPECT_THROW(evaluate_velocity(make_flow(FlowId::abc), std::vector<double>{0, 0}, 0), ArgumentError);
}

TEST(Flows, BenchmarkGridSizes) {
  auto dg = make_flow(FlowId::double_gyre);
  dg.steps = 100;
  const auto ds = integrate_flow(dg);
  EXPECT_EQ(ds.size(), 7200u);
  EXPECT_EQ(ds.steps(), 100u);
  EXPECT_DOUBLE_EQ(ds.times().front(), 0.0);
  EXPECT_DOUBLE_EQ(ds.times().back(), 2 * pi);
  // Seeds include the box corners with x varying fastest.
  EXPECT_DOUBLE_EQ(ds.position(119, 0)[0], 2.0);
  EXPECT_DOUBLE_EQ(ds.position(120, 0)[1], 1.0 / 59.0);

  const auto abc = make_flow(FlowId::abc);
  EXPECT_EQ(abc.grid.count(), 262144u);
  EXPECT_EQ(abc.steps, 40u);
  EXPECT_DOUBLE_EQ(abc.tau, 8.0);
}

TEST(Flows, InvalidConfigurationsThrow) {
  auto f = make_flow(FlowId::double_gyre, {4, 4});
  f.steps = 1;
  EXPECT_THROW(integrate_flow(f), ConfigError);
  f.steps = 3;
  f.tau = 0;
  EXPECT_THROW(integrate_flow(f), ConfigError);
  f.tau = 1;
  f.max_substep = 0;
  EXPECT_THROW(integrate_flow(f), ConfigError);
  f.max_substep = 0.02;
  f.grid.resolution = {4, 4, 4};
  EXPECT_THROW(integrate_flow(f), ConfigError);
  f.grid.resolution = {4, 0};
  EXPECT_THROW(integrate_flow(f), ConfigError);
}

// Quartering the substep changes positions by far less than the tolerance,
// which bounds the integration error of the default setting.
TEST(Flows, IntegrationIsConverged) {
  for (auto id : {FlowId::double_gyre, FlowId::four_centers, FlowId::abc}) {
    auto f = make_flow(id, id == FlowId::abc ? std::vector<std::size_t>{5, 5, 5} : std::vector<std::size_t>{12, 8});
    f.steps = 10;
    auto fine = f;
    fine.max_substep = f.max_substep / 4;
    const auto a = integrate_flow(f), b = integrate_flow(fine);
    double worst = 0;
    for (std::size_t q = 0; q < a.positions().size(); ++q)
      worst = std::max(worst, std::abs(a.positions()[q] - b.positions()[q]));
    EXPECT_LE(worst, 1e-6 * a.bounding_diagonal()) << to_string(id);
  }
}

TEST(Flows, SeedTimeAdvectsBeforeSampling) {
  auto f = make_flow(FlowId::double_gyre, {6, 3});
  f.steps = 5;
  f.t1 = 1.0;
  f.tau = 2.0;
  f.seed_time = 0.0;
  const auto late = integrate_flow(f);

  // Same particles sampled from the seeding time: frame 0 of `late`
  // must be where the early run lands at t=1.
  auto g = f;
  g.t1 = 0.0;
  g.tau = 1.0;
  g.steps = 2;
  g.seed_time.reset();
  const auto early = integrate_flow(g);
  for (std::size_t i = 0; i < late.size(); ++i)
    for (std::size_t c = 0; c < 2; ++c) EXPECT_NEAR(late.position(i, 0)[c], early.position(i, 1)[c], 1e-12);
  EXPECT_DOUBLE_EQ(late.times().front(), 1.0);
}
