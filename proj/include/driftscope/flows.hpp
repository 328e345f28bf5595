#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "driftscope/dataset.hpp"
#include "driftscope/errors.hpp"

namespace driftscope {

enum class FlowId { double_gyre, abc, four_centers, sine_ridge };

inline const char* to_string(FlowId id) {
  switch (id) {
    case FlowId::double_gyre: return "double-gyre";
    case FlowId::abc: return "abc";
    case FlowId::four_centers: return "four-centers";
    case FlowId::sine_ridge: return "sine-ridge";
  }
  return "?";
}

inline FlowId parse_flow_id(const std::string& name) {
  if (name == "double-gyre") return FlowId::double_gyre;
  if (name == "abc") return FlowId::abc;
  if (name == "four-centers") return FlowId::four_centers;
  if (name == "sine-ridge") return FlowId::sine_ridge;
  throw ConfigError("unknown flow '" + name + "' (expected double-gyre|abc|four-centers|sine-ridge)");
}

inline std::size_t flow_dimension(FlowId id) { return id == FlowId::abc ? 3 : 2; }

/// Flows given as a closed-form map from seed position to position at time t
/// rather than as a velocity field.
inline bool is_flow_map(FlowId id) { return id == FlowId::sine_ridge; }

struct DoubleGyreParams {
  double A = 0.1;
  double omega = std::numbers::pi / 5;
  double epsilon = 0.1;
};

struct AbcParams {
  double A = std::numbers::sqrt3;
  double B = std::numbers::sqrt2;
  double C = 1.0;
};

/// The printed Four Centers field, (-x g (2y^2 - 1), -y g (2x^2 - 1)) with
/// g = exp(-x^2 - y^2), has saddles at (+-1/sqrt2, +-1/sqrt2). The vortex form
/// flips the sign of the y component, which makes it the Hamiltonian flow of
/// x y g with a center in each quadrant.
enum class FourCentersForm { vortex, printed };

struct FourCentersParams {
  FourCentersForm form = FourCentersForm::vortex;
};

/// Ridge strength p(y) interpolates linearly between (y_low, p_low) and (y_high, p_high).
struct SineRidgeParams {
  double p_low = 0.05;
  double p_high = 4.0;
  double y_low = -4.0;
  double y_high = 4.0;

  double strength(double y) const { return p_low + (y - y_low) * (p_high - p_low) / (y_high - y_low); }
};

/// Rectangular seeding lattice; nodes include the box corners. Seeds are
/// numbered with x varying fastest.
struct SeedGrid {
  std::vector<std::size_t> resolution;
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t dim() const { return resolution.size(); }

  std::size_t count() const {
    std::size_t c = 1;
    for (auto r : resolution) c *= r;
    return c;
  }

  double spacing(std::size_t axis) const {
    return resolution[axis] > 1 ? (upper[axis] - lower[axis]) / static_cast<double>(resolution[axis] - 1) : 0.0;
  }

  double coordinate(std::size_t axis, std::size_t node) const {
    if (resolution[axis] == 1) return 0.5 * (lower[axis] + upper[axis]);
    return lower[axis] + spacing(axis) * static_cast<double>(node);
  }

  std::array<double, 3> seed(std::size_t idx) const {
    std::array<double, 3> p{0, 0, 0};
    for (std::size_t a = 0; a < dim(); ++a) {
      p[a] = coordinate(a, idx % resolution[a]);
      idx /= resolution[a];
    }
    return p;
  }

  void validate(std::size_t expected_dim) const {
    if (resolution.size() != expected_dim || lower.size() != expected_dim || upper.size() != expected_dim)
      throw ConfigError("seed grid dimension does not match the flow dimension " + std::to_string(expected_dim));
    for (std::size_t a = 0; a < expected_dim; ++a) {
      if (resolution[a] == 0) throw ConfigError("seed grid resolution must be positive");
      if (!(upper[a] >= lower[a])) throw ConfigError("seed grid box has upper < lower");
    }
  }
};

struct FlowSpec {
  FlowId id = FlowId::double_gyre;
  DoubleGyreParams double_gyre;
  AbcParams abc;
  FourCentersParams four_centers;
  SineRidgeParams sine_ridge;

  SeedGrid grid;
  double t1 = 0.0;
  double tau = 1.0;
  std::size_t steps = 2;
  /// Time at which seeds are placed; they are advected to t1 before sampling
  /// starts. Defaults to t1.
  std::optional<double> seed_time;

  /// RK4 substep bound. Each saved frame uses at least min_substeps steps.
  double max_substep = 0.02;
  std::size_t min_substeps = 4;

  std::size_t dim() const { return flow_dimension(id); }
  double start_of_seeding() const { return seed_time.value_or(t1); }
};

/// Flow configuration with the benchmark domain and time window of the given
/// flow and a grid of `resolution` nodes per axis.
inline FlowSpec make_flow(FlowId id, std::vector<std::size_t> resolution = {}) {
  FlowSpec f;
  f.id = id;
  switch (id) {
    case FlowId::double_gyre:
      f.grid = {{120, 60}, {0.0, 0.0}, {2.0, 1.0}};
      f.t1 = 0.0;
      f.tau = 2 * std::numbers::pi;
      f.steps = 100;
      break;
    case FlowId::abc: {
      const double tp = 2 * std::numbers::pi;
      f.grid = {{64, 64, 64}, {0.0, 0.0, 0.0}, {tp, tp, tp}};
      f.t1 = 0.0;
      f.tau = 8.0;
      f.steps = 40;
      break;
    }
    case FlowId::four_centers:
      f.grid = {{200, 200}, {-2.0, -2.0}, {2.0, 2.0}};
      f.t1 = 0.0;
      f.tau = 10.0;
      f.steps = 500;
      break;
    case FlowId::sine_ridge:
      f.grid = {{100, 200}, {-2.0, -4.0}, {2.0, 4.0}};
      f.t1 = 0.0;
      f.tau = 1.0;
      f.steps = 100;
      break;
  }
  if (!resolution.empty()) f.grid.resolution = std::move(resolution);
  return f;
}

namespace detail {

using Point = std::array<double, 3>;

inline Point velocity(const FlowSpec& flow, const Point& x, double t) {
  using std::numbers::pi;
  switch (flow.id) {
    case FlowId::double_gyre: {
      const auto& p = flow.double_gyre;
      const double a = p.epsilon * std::sin(p.omega * t);
      const double b = 1.0 - 2.0 * a;
      const double f = a * x[0] * x[0] + b * x[0];
      const double dfdx = 2.0 * a * x[0] + b;
      return {-pi * p.A * std::sin(pi * f) * std::cos(pi * x[1]),
              pi * p.A * std::cos(pi * f) * std::sin(pi * x[1]) * dfdx, 0.0};
    }
    case FlowId::abc: {
      const auto& p = flow.abc;
      return {p.A * std::sin(x[2]) + p.C * std::cos(x[1]), p.B * std::sin(x[0]) + p.A * std::cos(x[2]),
              p.C * std::sin(x[1]) + p.B * std::cos(x[0])};
    }
    case FlowId::four_centers: {
      const double g = std::exp(-x[0] * x[0] - x[1] * x[1]);
      const double vy = -x[1] * g * (2.0 * x[0] * x[0] - 1.0);
      return {-x[0] * g * (2.0 * x[1] * x[1] - 1.0),
              flow.four_centers.form == FourCentersForm::vortex ? -vy : vy, 0.0};
    }
    case FlowId::sine_ridge: break;
  }
  throw FlowKindError(std::string("flow '") + to_string(flow.id) + "' is a flow map, not a velocity field");
}

inline Point flow_map(const FlowSpec& flow, const Point& x, double t) {
  if (flow.id != FlowId::sine_ridge)
    throw FlowKindError(std::string("flow '") + to_string(flow.id) + "' is a velocity field, not a flow map");
  const double p = flow.sine_ridge.strength(x[1]);
  const double x2 = x[0] * x[0];
  return {x[0] / std::sqrt(x2 + (1.0 - x2) * std::exp(-2.0 * t * p)), x[1] + t, 0.0};
}

inline Point rk4_step(const FlowSpec& flow, const Point& x, double t, double h, std::size_t d) {
  auto axpy = [d](const Point& a, double s, const Point& b) {
    Point r{0, 0, 0};
    for (std::size_t c = 0; c < d; ++c) r[c] = a[c] + s * b[c];
    return r;
  };
  const Point k1 = velocity(flow, x, t);
  const Point k2 = velocity(flow, axpy(x, 0.5 * h, k1), t + 0.5 * h);
  const Point k3 = velocity(flow, axpy(x, 0.5 * h, k2), t + 0.5 * h);
  const Point k4 = velocity(flow, axpy(x, h, k3), t + h);
  Point r{0, 0, 0};
  for (std::size_t c = 0; c < d; ++c) r[c] = x[c] + h / 6.0 * (k1[c] + 2.0 * (k2[c] + k3[c]) + k4[c]);
  return r;
}

inline Point advect(const FlowSpec& flow, Point x, double from, double to, std::size_t substeps) {
  const double h = (to - from) / static_cast<double>(substeps);
  for (std::size_t s = 0; s < substeps; ++s) x = rk4_step(flow, x, from + h * static_cast<double>(s), h, flow.dim());
  return x;
}

inline Point to_point(std::span<const double> x, std::size_t d) {
  if (x.size() != d) throw ArgumentError("position has " + std::to_string(x.size()) + " components, flow expects " +
                                         std::to_string(d));
  Point p{0, 0, 0};
  for (std::size_t c = 0; c < d; ++c) {
    if (!std::isfinite(x[c])) throw ArgumentError("non-finite position");
    p[c] = x[c];
  }
  return p;
}

inline std::size_t substeps_for(const FlowSpec& flow, double interval) {
  const auto by_size = static_cast<std::size_t>(std::ceil(std::abs(interval) / flow.max_substep));
  return std::max({flow.min_substeps, by_size, std::size_t{1}});
}

}  // namespace detail

/// Closed-form velocity of a velocity-field flow at position x and time t.
inline std::vector<double> evaluate_velocity(const FlowSpec& flow, std::span<const double> x, double t) {
  const auto d = flow.dim();
  const auto v = detail::velocity(flow, detail::to_point(x, d), t);
  return {v.begin(), v.begin() + static_cast<std::ptrdiff_t>(d)};
}

/// Position at time t of the particle seeded at x, for flow-map flows.
inline std::vector<double> evaluate_flow_map(const FlowSpec& flow, std::span<const double> x, double t) {
  const auto d = flow.dim();
  const auto p = detail::flow_map(flow, detail::to_point(x, d), t);
  return {p.begin(), p.begin() + static_cast<std::ptrdiff_t>(d)};
}

/// Samples particle trajectories of an analytic flow on T uniformly spaced
/// times over [t1, t1 + tau]. Velocity fields are integrated with classical
/// RK4; flow maps are evaluated directly at the elapsed time since seeding.
inline TrajectoryDataset integrate_flow(const FlowSpec& flow) {
  const std::size_t d = flow.dim();
  flow.grid.validate(d);
  if (flow.steps < 2) throw ConfigError("a flow needs at least 2 time steps");
  if (!(flow.tau > 0)) throw ConfigError("tau must be positive");
  if (!(flow.max_substep > 0)) throw ConfigError("max_substep must be positive");

  const std::size_t n = flow.grid.count();
  const std::size_t T = flow.steps;
  std::vector<double> times(T);
  for (std::size_t k = 0; k < T; ++k)
    times[k] = flow.t1 + flow.tau * static_cast<double>(k) / static_cast<double>(T - 1);
  times.back() = flow.t1 + flow.tau;

  const double t_seed = flow.start_of_seeding();
  const bool is_map = is_flow_map(flow.id);
  const std::size_t frame_substeps = detail::substeps_for(flow, flow.tau / static_cast<double>(T - 1));
  const std::size_t lead_substeps = detail::substeps_for(flow, flow.t1 - t_seed);

  std::vector<double> pos(n * T * d);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t si = 0; si < static_cast<std::ptrdiff_t>(n); ++si) {
    const auto i = static_cast<std::size_t>(si);
    const detail::Point seed = flow.grid.seed(i);
    double* out = pos.data() + i * T * d;
    if (is_map) {
      for (std::size_t k = 0; k < T; ++k) {
        const auto p = detail::flow_map(flow, seed, times[k] - t_seed);
        for (std::size_t c = 0; c < d; ++c) out[k * d + c] = p[c];
      }
      continue;
    }
    detail::Point x = seed;
    if (t_seed != flow.t1) x = detail::advect(flow, x, t_seed, flow.t1, lead_substeps);
    for (std::size_t k = 0; k < T; ++k) {
      if (k > 0) x = detail::advect(flow, x, times[k - 1], times[k], frame_substeps);
      for (std::size_t c = 0; c < d; ++c) out[k * d + c] = x[c];
    }
  }
  return TrajectoryDataset(n, d, std::move(times), std::move(pos));
}

}  // namespace driftscope
