#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "driftscope/dataset.hpp"
#include "driftscope/diffusion.hpp"
#include "driftscope/errors.hpp"
#include "driftscope/flows.hpp"
#include "driftscope/log.hpp"
#include "driftscope/scalar_field.hpp"
#include "driftscope/spatial_index.hpp"

namespace driftscope {

/// Default covariance neighborhood size: 9 in 2D, 27 in 3D.
inline std::size_t default_separation_neighbors(std::size_t dim) { return dim == 3 ? 27 : 9; }

/// k nearest neighbors of every particle at one time step, self excluded,
/// stored row-wise (n x k).
struct KnnLists {
  std::size_t k = 0;
  std::vector<std::size_t> indices;

  std::span<const std::size_t> of(std::size_t i) const { return {indices.data() + i * k, k}; }
};

inline std::size_t anchor_step(const TrajectoryDataset& ds, Direction dir) {
  return dir == Direction::forward ? 0 : ds.steps() - 1;
}

namespace detail {

inline constexpr double knn_tie_tolerance = 1e-9;

/// k nearest neighbors where distances equal up to a relative tolerance count
/// as ties and resolve toward lower indices. Lattice seeds have many exact
/// ties; without this a rigid motion of the data can flip which of them
/// survives the cut through rounding alone.
inline std::vector<std::size_t> tie_stable_knn(const KdTree& tree, std::span<const double> q, std::size_t k,
                                               std::size_t exclude) {
  const std::size_t available = tree.size() - (exclude < tree.size() ? 1 : 0);
  std::size_t fetch = std::min(k + 8, available);
  std::vector<Neighbor> nn;
  while (true) {
    nn = tree.knn(q, fetch, exclude);
    if (fetch == available || nn.back().dist2 > nn[k - 1].dist2 * (1 + knn_tie_tolerance)) break;
    fetch = std::min(2 * fetch, available);
  }
  for (std::size_t a = 0; a < nn.size();) {
    std::size_t b = a + 1;
    while (b < nn.size() && nn[b].dist2 <= nn[a].dist2 * (1 + knn_tie_tolerance)) ++b;
    std::sort(nn.begin() + static_cast<std::ptrdiff_t>(a), nn.begin() + static_cast<std::ptrdiff_t>(b),
              [](const Neighbor& x, const Neighbor& y) { return x.index < y.index; });
    a = b;
  }
  std::vector<std::size_t> out(k);
  for (std::size_t q2 = 0; q2 < k; ++q2) out[q2] = nn[q2].index;
  return out;
}

}  // namespace detail

inline KnnLists spatial_knn(const TrajectoryDataset& ds, std::size_t step, std::size_t k) {
  const std::size_t n = ds.size();
  if (step >= ds.steps()) throw ArgumentError("time index out of range");
  if (k == 0 || k >= n)
    throw ArgumentError("neighbor count " + std::to_string(k) + " must lie in [1, " + std::to_string(n - 1) + "]");
  const auto pts = ds.positions_at(step);
  const KdTree tree(pts, ds.dim());
  KnnLists out;
  out.k = k;
  out.indices.resize(n * k);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t si = 0; si < static_cast<std::ptrdiff_t>(n); ++si) {
    const auto i = static_cast<std::size_t>(si);
    const auto nn = detail::tie_stable_knn(tree, ds.position(i, step), k, i);
    std::copy(nn.begin(), nn.end(), out.indices.begin() + static_cast<std::ptrdiff_t>(i * k));
  }
  return out;
}

inline KnnLists spatial_knn(const TrajectoryDataset& ds, Direction anchor, std::size_t k) {
  return spatial_knn(ds, anchor_step(ds, anchor), k);
}

namespace detail {

inline constexpr double eigen_floor = 1e-300;

/// Largest eigenvalue of C = sum_j o_j o_j^T from the k x k Gram matrix of
/// the offsets (same nonzero spectrum).
inline double top_gram_eigenvalue(const Eigen::MatrixXd& offsets) {
  const Eigen::MatrixXd g = offsets.transpose() * offsets;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g, Eigen::EigenvaluesOnly);
  return std::max(es.eigenvalues().maxCoeff(), eigen_floor);
}

inline void check_neighborhood(std::size_t k, std::size_t d) {
  if (k < d)
    throw DegenerateNeighborhoodError("covariance needs at least " + std::to_string(d) + " neighbors, got " +
                                      std::to_string(k));
}

}  // namespace detail

/// gamma = (1/tau) log lambda_max(C), C summing outer products of the
/// neighbors' stacked position offsets relative to the particle. The anchor
/// time (t_1 forward, t_T backward) defines the neighborhood and is left out
/// of the stacked vector. k = 0 picks the dimension default.
inline ScalarField particle_separation(const TrajectoryDataset& ds, Direction dir, std::size_t k = 0) {
  const std::size_t n = ds.size(), T = ds.steps(), d = ds.dim();
  if (k == 0) k = default_separation_neighbors(d);
  detail::check_neighborhood(k, d);
  const auto nbrs = spatial_knn(ds, dir, k);
  const std::size_t anchor = anchor_step(ds, dir);
  const double inv_tau = 1.0 / ds.duration();

  ScalarField f;
  f.kind = FieldKind::particle_separation;
  f.direction = dir;
  f.neighbors = k;
  f.values.resize(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t si = 0; si < static_cast<std::ptrdiff_t>(n); ++si) {
    const auto i = static_cast<std::size_t>(si);
    Eigen::MatrixXd off((T - 1) * d, k);
    const auto a = ds.trajectory(i);
    const auto list = nbrs.of(i);
    for (std::size_t q = 0; q < k; ++q) {
      const auto b = ds.trajectory(list[q]);
      std::size_t row = 0;
      for (std::size_t t = 0; t < T; ++t) {
        if (t == anchor) continue;
        for (std::size_t c = 0; c < d; ++c) off(static_cast<Eigen::Index>(row++), static_cast<Eigen::Index>(q)) =
            b[t * d + c] - a[t * d + c];
      }
    }
    f.values[i] = inv_tau * std::log(detail::top_gram_eigenvalue(off));
  }
  return f;
}

/// gamma_s: the same covariance with Phi_s(j) - Phi_s(i) in place of the
/// stacked position offsets, over the same spatial neighborhoods.
inline ScalarField diffusion_separation(const TrajectoryDataset& ds, const DiffusionEmbedding& E, double s,
                                        Direction dir, std::size_t k = 0) {
  const std::size_t n = ds.size(), d = ds.dim();
  if (E.size() != n) throw ArgumentError("embedding does not belong to this dataset");
  if (k == 0) k = default_separation_neighbors(d);
  detail::check_neighborhood(k, d);
  const auto nbrs = spatial_knn(ds, dir, k);
  const auto w = scale_weights(E, s);
  const std::size_t m = E.modes();
  const double inv_tau = 1.0 / ds.duration();

  ScalarField f;
  f.kind = FieldKind::diffusion_separation;
  f.direction = dir;
  f.scale = s;
  f.neighbors = k;
  f.values.resize(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t si = 0; si < static_cast<std::ptrdiff_t>(n); ++si) {
    const auto i = static_cast<std::size_t>(si);
    Eigen::MatrixXd off(static_cast<Eigen::Index>(m > 0 ? m - 1 : 0), static_cast<Eigen::Index>(k));
    const auto list = nbrs.of(i);
    for (std::size_t q = 0; q < k; ++q)
      for (std::size_t l = 1; l < m; ++l)
        off(static_cast<Eigen::Index>(l - 1), static_cast<Eigen::Index>(q)) =
            w[l] * (E.eigenvectors(static_cast<Eigen::Index>(list[q]), static_cast<Eigen::Index>(l)) -
                    E.eigenvectors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l)));
    f.values[i] = inv_tau * std::log(off.rows() > 0 ? detail::top_gram_eigenvalue(off) : detail::eigen_floor);
  }
  return f;
}

/// Scalar values on the nodes of a seed grid (x fastest).
struct GridField {
  SeedGrid grid;
  std::vector<double> values;

  /// Node closest to a point, clamped to the grid.
  std::vector<std::size_t> nearest_node(std::span<const double> p) const {
    std::vector<std::size_t> node(grid.dim());
    for (std::size_t a = 0; a < grid.dim(); ++a) {
      const double h = grid.spacing(a);
      const double r = h > 0 ? std::round((p[a] - grid.lower[a]) / h) : 0.0;
      node[a] = static_cast<std::size_t>(std::clamp(r, 0.0, static_cast<double>(grid.resolution[a] - 1)));
    }
    return node;
  }

  std::size_t flat(std::span<const std::size_t> node) const {
    std::size_t idx = 0;
    for (std::size_t a = grid.dim(); a-- > 0;) idx = idx * grid.resolution[a] + node[a];
    return idx;
  }

  double sample_nearest(std::span<const double> p) const { return values[flat(nearest_node(p))]; }
};

/// FTLE from sampled flow-map images of grid nodes. `images` holds, per node,
/// `blocks` stacked d-vectors (time-major); the Jacobian with respect to the
/// seed coordinate comes from central differences, one-sided on the boundary.
/// Value = (1/tau) log sqrt(lambda_max(J^T J)).
inline GridField ftle_from_images(const SeedGrid& grid, std::span<const double> images, std::size_t blocks,
                                  double tau) {
  const std::size_t d = grid.dim(), n = grid.count(), rows = blocks * d;
  if (images.size() != n * rows) throw ArgumentError("flow-map image array does not match grid");
  if (!(tau > 0)) throw ArgumentError("tau must be positive");
  GridField out{grid, std::vector<double>(n)};
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t sidx = 0; sidx < static_cast<std::ptrdiff_t>(n); ++sidx) {
    const auto idx = static_cast<std::size_t>(sidx);
    std::vector<std::size_t> node(d);
    std::size_t rest = idx;
    for (std::size_t a = 0; a < d; ++a) {
      node[a] = rest % grid.resolution[a];
      rest /= grid.resolution[a];
    }
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(d));
    std::size_t stride = 1;
    for (std::size_t a = 0; a < d; ++a) {
      const std::size_t res = grid.resolution[a];
      if (res > 1) {
        const std::size_t lo = node[a] > 0 ? node[a] - 1 : node[a];
        const std::size_t hi = node[a] + 1 < res ? node[a] + 1 : node[a];
        const std::size_t ilo = idx - (node[a] - lo) * stride, ihi = idx + (hi - node[a]) * stride;
        const double h = grid.spacing(a) * static_cast<double>(hi - lo);
        for (std::size_t r = 0; r < rows; ++r)
          J(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(a)) =
              (images[ihi * rows + r] - images[ilo * rows + r]) / h;
      }
      stride *= res;
    }
    const Eigen::MatrixXd jtj = J.transpose() * J;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jtj, Eigen::EigenvaluesOnly);
    const double lmax = std::max(es.eigenvalues().maxCoeff(), detail::eigen_floor);
    out.values[idx] = 0.5 * std::log(lmax) / tau;
  }
  return out;
}

/// Grid FTLE of an analytic flow over [t1, t1 + tau] using the flow's seed
/// grid. With `time_averaged`, every sampled step after t1 is stacked
/// (time-major) into the map, giving the t-FTLE.
inline GridField grid_ftle(const FlowSpec& flow, bool time_averaged) {
  const auto ds = integrate_flow(flow);
  const std::size_t n = ds.size(), T = ds.steps(), d = ds.dim();
  const std::size_t blocks = time_averaged ? T - 1 : 1;
  std::vector<double> images(n * blocks * d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto traj = ds.trajectory(i);
    const std::size_t first = time_averaged ? 1 : T - 1;
    std::copy(traj.begin() + static_cast<std::ptrdiff_t>(first * d), traj.end(),
              images.begin() + static_cast<std::ptrdiff_t>(i * blocks * d));
  }
  return ftle_from_images(flow.grid, images, blocks, flow.tau);
}

/// d(p) = log sum_{j in kNN(p)} 1 / |p - p_j| at one time step.
inline ScalarField knn_log_density(const TrajectoryDataset& ds, std::size_t step, std::size_t k = 27) {
  const std::size_t n = ds.size();
  if (step >= ds.steps()) throw ArgumentError("time index out of range");
  if (k == 0 || k >= n) throw ArgumentError("density neighbor count must lie in [1, n-1]");
  const auto pts = ds.positions_at(step);
  const KdTree tree(pts, ds.dim());
  ScalarField f;
  f.kind = FieldKind::density;
  f.neighbors = k;
  f.time_index = step;
  f.values.resize(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t si = 0; si < static_cast<std::ptrdiff_t>(n); ++si) {
    const auto i = static_cast<std::size_t>(si);
    double acc = 0;
    for (const auto& nb : tree.knn(ds.position(i, step), k, i)) acc += 1.0 / std::max(std::sqrt(nb.dist2), 1e-12);
    f.values[i] = std::log(acc);
  }
  return f;
}

/// Min-max rescale to [0, 1] raised to `a`; `invert` yields 1 - v^a.
inline ScalarField opacity_map(const ScalarField& field, double a, bool invert = false) {
  if (!(a > 0)) throw ArgumentError("opacity exponent must be positive");
  ScalarField out = field;
  out.kind = FieldKind::opacity;
  if (field.values.empty()) return out;
  const auto [lo, hi] = std::minmax_element(field.values.begin(), field.values.end());
  const double mn = *lo, range = *hi - *lo;
  if (!(range > 0)) {
    log::warn("opacity map of a constant field; all values set to 0");
    std::fill(out.values.begin(), out.values.end(), 0.0);
    return out;
  }
  for (auto& v : out.values) {
    const double p = std::pow((v - mn) / range, a);
    v = invert ? 1.0 - p : p;
  }
  return out;
}

}  // namespace driftscope
