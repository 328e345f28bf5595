#pragma once

// Small synthetic datasets and generators shared by the unit tests.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "driftscope/dataset.hpp"
#include "driftscope/flows.hpp"

namespace fixture {

using driftscope::TrajectoryDataset;

/// `count` uniformly spaced times on [0, span].
inline std::vector<double> uniform_times(std::size_t count, double span = 1.0) {
  std::vector<double> t(count);
  for (std::size_t k = 0; k < count; ++k) t[k] = span * static_cast<double>(k) / static_cast<double>(count - 1);
  return t;
}

/// Particles that never move, one per entry of `points` (packed n x d).
inline TrajectoryDataset static_dataset(const std::vector<double>& points, std::size_t d,
                                        std::vector<double> times) {
  const std::size_t n = points.size() / d, T = times.size();
  std::vector<double> pos(n * T * d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < T; ++k)
      for (std::size_t c = 0; c < d; ++c) pos[(i * T + k) * d + c] = points[i * d + c];
  return TrajectoryDataset(n, d, std::move(times), std::move(pos));
}

/// Static nx x ny lattice with spacing h, x fastest.
inline TrajectoryDataset static_lattice(std::size_t nx, std::size_t ny, double h = 1.0, std::size_t steps = 2) {
  std::vector<double> pts;
  for (std::size_t y = 0; y < ny; ++y)
    for (std::size_t x = 0; x < nx; ++x) {
      pts.push_back(h * static_cast<double>(x));
      pts.push_back(h * static_cast<double>(y));
    }
  return static_dataset(pts, 2, uniform_times(steps));
}

/// Random-walk trajectories with irregular but increasing time stamps.
inline TrajectoryDataset random_walks(std::size_t n, std::size_t T, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> step(0.0, 0.3);
  std::uniform_real_distribution<double> start(-2.0, 2.0), gap(0.2, 1.5);
  std::vector<double> times(T);
  times[0] = gap(rng);
  for (std::size_t k = 1; k < T; ++k) times[k] = times[k - 1] + gap(rng);
  std::vector<double> pos(n * T * d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < d; ++c) {
      double x = start(rng);
      for (std::size_t k = 0; k < T; ++k) {
        pos[(i * T + k) * d + c] = x;
        x += step(rng);
      }
    }
  return TrajectoryDataset(n, d, std::move(times), std::move(pos));
}

/// Coarse Double Gyre: fast to build, still well connected.
inline TrajectoryDataset small_gyre(std::size_t nx = 24, std::size_t ny = 12, std::size_t steps = 30) {
  auto flow = driftscope::make_flow(driftscope::FlowId::double_gyre, {nx, ny});
  flow.steps = steps;
  return driftscope::integrate_flow(flow);
}

/// Unique scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("driftscope-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace fixture
