#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "driftscope/errors.hpp"

namespace driftscope {

enum class Direction { forward, backward };

inline const char* to_string(Direction d) { return d == Direction::forward ? "forward" : "backward"; }

inline Direction parse_direction(const std::string& s) {
  if (s == "forward") return Direction::forward;
  if (s == "backward") return Direction::backward;
  throw ConfigError("unknown direction '" + s + "' (expected forward|backward)");
}

/// n particles sampled at T shared time steps in d = 2 or 3 dimensions.
///
/// Positions are stored particle-major, then time, then dimension, so a
/// particle's whole trajectory is one contiguous block of T*d values.
/// Instances are immutable once constructed.
class TrajectoryDataset {
 public:
  TrajectoryDataset(std::size_t particles, std::size_t dim, std::vector<double> times,
                    std::vector<double> positions)
      : n_(particles), d_(dim), times_(std::move(times)), positions_(std::move(positions)) {
    validate();
  }

  std::size_t size() const { return n_; }
  std::size_t steps() const { return times_.size(); }
  std::size_t dim() const { return d_; }

  std::span<const double> times() const { return times_; }
  double start_time() const { return times_.front(); }
  double end_time() const { return times_.back(); }
  /// tau = t_T - t_1
  double duration() const { return times_.back() - times_.front(); }

  std::span<const double> positions() const { return positions_; }

  std::span<const double> trajectory(std::size_t i) const {
    return {positions_.data() + i * steps() * d_, steps() * d_};
  }

  std::span<const double> position(std::size_t i, std::size_t k) const {
    return {positions_.data() + (i * steps() + k) * d_, d_};
  }

  /// All particle positions at time index k, packed n x d.
  std::vector<double> positions_at(std::size_t k) const {
    std::vector<double> out(n_ * d_);
    for (std::size_t i = 0; i < n_; ++i) {
      auto p = position(i, k);
      std::copy(p.begin(), p.end(), out.begin() + static_cast<std::ptrdiff_t>(i * d_));
    }
    return out;
  }

  /// Axis-aligned bounds over all particles and times, as (lower, upper).
  std::pair<std::vector<double>, std::vector<double>> bounds() const {
    std::vector<double> lo(d_, positions_[0]), hi(d_, positions_[0]);
    for (std::size_t c = 0; c < d_; ++c) lo[c] = hi[c] = positions_[c];
    for (std::size_t idx = 0; idx < positions_.size(); ++idx) {
      const std::size_t c = idx % d_;
      lo[c] = std::min(lo[c], positions_[idx]);
      hi[c] = std::max(hi[c], positions_[idx]);
    }
    return {lo, hi};
  }

  double bounding_diagonal() const {
    auto [lo, hi] = bounds();
    double s = 0;
    for (std::size_t c = 0; c < d_; ++c) s += (hi[c] - lo[c]) * (hi[c] - lo[c]);
    return std::sqrt(s);
  }

 private:
  void validate() const {
    if (d_ != 2 && d_ != 3) throw ValidationError("dimension must be 2 or 3, got " + std::to_string(d_));
    if (n_ == 0) throw ValidationError("dataset has no particles");
    if (times_.size() < 2) throw ValidationError("at least two time steps are required");
    for (std::size_t k = 0; k < times_.size(); ++k) {
      if (!std::isfinite(times_[k])) throw ValidationError("non-finite time value");
      if (k > 0 && !(times_[k] > times_[k - 1]))
        throw ValidationError("times must be strictly increasing (index " + std::to_string(k) + ")");
    }
    if (positions_.size() != n_ * times_.size() * d_)
      throw ValidationError("position array has " + std::to_string(positions_.size()) + " values, expected " +
                            std::to_string(n_ * times_.size() * d_));
    for (double v : positions_)
      if (!std::isfinite(v)) throw ValidationError("non-finite particle position");
  }

  std::size_t n_;
  std::size_t d_;
  std::vector<double> times_;
  std::vector<double> positions_;
};

/// Per-step weights that turn the trapezoidal dynamic distance into a plain
/// weighted sum of per-step Euclidean distances. The weights sum to one.
inline std::vector<double> dynamic_distance_weights(std::span<const double> times,
                                                    std::span<const std::size_t> steps) {
  const std::size_t s = steps.size();
  std::vector<double> w(s, 0.0);
  if (s == 1) {
    w[0] = 1.0;
    return w;
  }
  const double span = times[steps[s - 1]] - times[steps[0]];
  for (std::size_t q = 0; q + 1 < s; ++q) {
    const double half = 0.5 * (times[steps[q + 1]] - times[steps[q]]) / span;
    w[q] += half;
    w[q + 1] += half;
  }
  return w;
}

/// Time indices 0, stride, 2*stride, ... below T.
inline std::vector<std::size_t> subsampled_steps(std::size_t steps, std::size_t stride) {
  if (stride == 0) throw ArgumentError("stride must be at least 1");
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < steps; k += stride) out.push_back(k);
  return out;
}

inline double step_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t c = 0; c < a.size(); ++c) s += (a[c] - b[c]) * (a[c] - b[c]);
  return std::sqrt(s);
}

/// Time-integrated Euclidean distance between two trajectories (trapezoid
/// rule, normalized by the time span), evaluated over the given time indices.
inline double dynamic_distance(const TrajectoryDataset& ds, std::size_t i, std::size_t j,
                               std::span<const std::size_t> steps) {
  if (i >= ds.size() || j >= ds.size()) throw ArgumentError("particle index out of range");
  if (steps.empty()) throw ArgumentError("empty time-step selection");
  const auto w = dynamic_distance_weights(ds.times(), steps);
  double acc = 0;
  for (std::size_t q = 0; q < steps.size(); ++q)
    acc += w[q] * step_distance(ds.position(i, steps[q]), ds.position(j, steps[q]));
  return acc;
}

inline double dynamic_distance(const TrajectoryDataset& ds, std::size_t i, std::size_t j) {
  std::vector<std::size_t> all(ds.steps());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return dynamic_distance(ds, i, j, all);
}

/// Same particles observed backwards in time: t'_k = -t_{T-1-k}.
inline TrajectoryDataset time_reversed(const TrajectoryDataset& ds) {
  const std::size_t T = ds.steps(), d = ds.dim();
  std::vector<double> times(T), pos(ds.positions().size());
  for (std::size_t k = 0; k < T; ++k) times[k] = -ds.times()[T - 1 - k];
  for (std::size_t i = 0; i < ds.size(); ++i)
    for (std::size_t k = 0; k < T; ++k) {
      auto src = ds.position(i, T - 1 - k);
      std::copy(src.begin(), src.end(), pos.begin() + static_cast<std::ptrdiff_t>((i * T + k) * d));
    }
  return TrajectoryDataset(ds.size(), d, std::move(times), std::move(pos));
}

}  // namespace driftscope
