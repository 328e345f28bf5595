#pragma once

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "driftscope/dataset.hpp"
#include "driftscope/errors.hpp"
#include "driftscope/landmarks.hpp"
#include "driftscope/log.hpp"
#include "driftscope/spatial_index.hpp"

namespace driftscope {

/// Which point set a landmark's bandwidth neighbors are drawn from.
enum class BandwidthReference {
  landmarks,  // neighbors among the other landmarks
  particles,  // neighbors among all particles
};

struct BandwidthOptions {
  std::size_t neighbors = 6;
  double alpha = 1.0;
  BandwidthReference reference = BandwidthReference::landmarks;
};

/// sigma[l][k]: mean distance from landmark l to its nearest neighbors at
/// time step k. alpha scales every bandwidth inside the kernel exponent.
struct BandwidthTable {
  std::size_t landmarks = 0;
  std::size_t steps = 0;
  std::size_t neighbors = 6;
  double alpha = 1.0;
  std::vector<double> sigma;

  double at(std::size_t l, std::size_t k) const { return sigma[l * steps + k]; }
};

inline BandwidthTable compute_bandwidths(const TrajectoryDataset& ds, const LandmarkSet& lm,
                                         const BandwidthOptions& opt = {}) {
  const std::size_t nl = lm.size(), T = ds.steps(), d = ds.dim();
  const bool among_landmarks = opt.reference == BandwidthReference::landmarks;
  const std::size_t pool = among_landmarks ? nl : ds.size();
  if (opt.neighbors == 0) throw ArgumentError("bandwidth neighbor count must be positive");
  if (pool <= opt.neighbors)
    throw ArgumentError("bandwidths need more than " + std::to_string(opt.neighbors) + " reference points, have " +
                        std::to_string(pool));
  if (!(opt.alpha > 0)) throw ArgumentError("alpha must be positive");
  if (opt.alpha < 0.75 || opt.alpha > 1.75)
    log::warn("alpha " + std::to_string(opt.alpha) + " is outside the usual range [0.75, 1.75]");
  for (auto idx : lm.indices)
    if (idx >= ds.size()) throw ArgumentError("landmark index out of range");

  BandwidthTable bw;
  bw.landmarks = nl;
  bw.steps = T;
  bw.neighbors = opt.neighbors;
  bw.alpha = opt.alpha;
  bw.sigma.assign(nl * T, 0.0);

  const double floor = 1e-12 * ds.bounding_diagonal();
  std::size_t floored = 0;
  std::vector<double> pts(pool * d);
  for (std::size_t k = 0; k < T; ++k) {
    for (std::size_t p = 0; p < pool; ++p) {
      auto x = ds.position(among_landmarks ? lm.indices[p] : p, k);
      std::copy(x.begin(), x.end(), pts.begin() + static_cast<std::ptrdiff_t>(p * d));
    }
    const KdTree tree(pts, d);
#pragma omp parallel for schedule(static) reduction(+ : floored)
    for (std::ptrdiff_t sl = 0; sl < static_cast<std::ptrdiff_t>(nl); ++sl) {
      const auto l = static_cast<std::size_t>(sl);
      const std::size_t self = among_landmarks ? l : lm.indices[l];
      const auto nn = tree.knn(ds.position(lm.indices[l], k), opt.neighbors, self);
      double s = 0;
      for (const auto& nb : nn) s += std::sqrt(nb.dist2);
      s /= static_cast<double>(nn.size());
      if (!(s > floor)) {
        s = floor;
        ++floored;
      }
      bw.sigma[l * T + k] = s;
    }
  }
  if (floored > 0)
    log::warn(std::to_string(floored) + " bandwidths collapsed to zero (coincident positions) and were floored");
  return bw;
}

/// What to do with particles that end up with no landmark affinity above the
/// threshold.
enum class OrphanPolicy {
  error,   // throw ConnectivityError
  attach,  // keep the single strongest (sub-threshold) affinity
};

/// Landmark affinity matrix: rows are particles, columns are landmarks.
struct SparseKernel {
  std::size_t rows = 0;
  std::size_t cols = 0;
  double threshold = 1e-6;
  /// Particles kept alive through OrphanPolicy::attach.
  std::vector<std::size_t> attached;
  Eigen::SparseMatrix<double> matrix;  // column-major, rows x cols
};

/// Kernel similarity between landmark l (particle lm.indices[l]) and particle j:
/// exp(-(1/(T-1)) * sum_k |p_l(t_k) - p_j(t_k)|^2 / (alpha sigma_{k,l})^2).
inline double landmark_affinity(const TrajectoryDataset& ds, const LandmarkSet& lm, const BandwidthTable& bw,
                                std::size_t l, std::size_t j) {
  const std::size_t T = ds.steps(), d = ds.dim();
  const auto a = ds.trajectory(lm.indices[l]);
  const auto b = ds.trajectory(j);
  double e = 0;
  for (std::size_t k = 0; k < T; ++k) {
    double s2 = 0;
    for (std::size_t c = 0; c < d; ++c) {
      const double t = a[k * d + c] - b[k * d + c];
      s2 += t * t;
    }
    const double h = bw.alpha * bw.at(l, k);
    e += s2 / (h * h);
  }
  return std::exp(-e / static_cast<double>(T - 1));
}

/// Assembles the sparse n x n_l landmark kernel. Candidate particles for each
/// landmark come from a radius query on the positions at t_1; the radius is
/// where a kernel with the largest t_1 bandwidth reaches `threshold`. Values
/// below the threshold are dropped. A particle left with no landmark affinity
/// at all either raises ConnectivityError or, with OrphanPolicy::attach, keeps
/// its strongest affinity (floored to the smallest normal double).
inline SparseKernel build_landmark_kernel(const TrajectoryDataset& ds, const LandmarkSet& lm, const BandwidthTable& bw,
                                          double threshold = 1e-6, OrphanPolicy orphans = OrphanPolicy::error) {
  const std::size_t n = ds.size(), nl = lm.size(), T = ds.steps(), d = ds.dim();
  if (bw.landmarks != nl || bw.steps != T) throw ArgumentError("bandwidth table does not match landmarks/dataset");
  if (threshold < 0 || threshold >= 1) throw ArgumentError("kernel threshold must lie in [0, 1)");
  for (double s : bw.sigma)
    if (!(s > 0)) throw ArgumentError("bandwidths must be positive");

  double sigma_max = 0;
  for (std::size_t l = 0; l < nl; ++l) sigma_max = std::max(sigma_max, bw.at(l, 0));
  const double cutoff = threshold > 0 ? -std::log(threshold) : std::numeric_limits<double>::infinity();
  const double radius = bw.alpha * sigma_max * std::sqrt(cutoff);
  const double radius2 = radius * radius;
  // Exponent limit before division by (T-1).
  const double exponent_limit = cutoff * static_cast<double>(T - 1);

  const auto start = ds.positions_at(0);
  const KdTree tree(start, d);

  std::vector<std::vector<std::pair<std::size_t, double>>> columns(nl);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t sl = 0; sl < static_cast<std::ptrdiff_t>(nl); ++sl) {
    const auto l = static_cast<std::size_t>(sl);
    const auto a = ds.trajectory(lm.indices[l]);
    std::vector<double> inv_h2(T);
    for (std::size_t k = 0; k < T; ++k) {
      const double h = bw.alpha * bw.at(l, k);
      inv_h2[k] = 1.0 / (h * h);
    }
    std::vector<std::size_t> candidates;
    if (std::isfinite(radius2)) {
      candidates = tree.within(ds.position(lm.indices[l], 0), radius2);
    } else {
      candidates.resize(n);
      std::iota(candidates.begin(), candidates.end(), std::size_t{0});
    }
    auto& col = columns[l];
    for (std::size_t j : candidates) {
      const auto b = ds.trajectory(j);
      double e = 0;
      for (std::size_t k = 0; k < T && e <= exponent_limit; ++k) {
        double s2 = 0;
        for (std::size_t c = 0; c < d; ++c) {
          const double t = a[k * d + c] - b[k * d + c];
          s2 += t * t;
        }
        e += s2 * inv_h2[k];
      }
      const double v = std::exp(-e / static_cast<double>(T - 1));
      if (v >= threshold && v > 0) col.emplace_back(j, v);
    }
  }

  SparseKernel K;
  K.rows = n;
  K.cols = nl;
  K.threshold = threshold;
  std::vector<Eigen::Triplet<double>> trip;
  std::size_t nnz = 0;
  for (const auto& c : columns) nnz += c.size();
  trip.reserve(nnz);
  std::vector<char> covered(n, 0);
  for (std::size_t l = 0; l < nl; ++l)
    for (const auto& [j, v] : columns[l]) {
      trip.emplace_back(static_cast<int>(j), static_cast<int>(l), v);
      covered[j] = 1;
    }

  std::vector<std::size_t> lost;
  for (std::size_t j = 0; j < n; ++j)
    if (!covered[j]) lost.push_back(j);
  if (!lost.empty() && orphans == OrphanPolicy::error) {
    std::ostringstream msg;
    msg << lost.size() << " particle(s) have no landmark affinity above " << threshold << ": ";
    for (std::size_t q = 0; q < std::min<std::size_t>(lost.size(), 20); ++q) msg << (q ? "," : "") << lost[q];
    if (lost.size() > 20) msg << ",...";
    throw ConnectivityError(msg.str());
  }
  for (std::size_t j : lost) {
    const auto b = ds.trajectory(j);
    double best_e = std::numeric_limits<double>::infinity();
    std::size_t best_l = 0;
    for (std::size_t l = 0; l < nl; ++l) {
      const auto a = ds.trajectory(lm.indices[l]);
      double e = 0;
      for (std::size_t k = 0; k < T && e < best_e; ++k) {
        double s2 = 0;
        for (std::size_t c = 0; c < d; ++c) {
          const double t = a[k * d + c] - b[k * d + c];
          s2 += t * t;
        }
        const double h = bw.alpha * bw.at(l, k);
        e += s2 / (h * h);
      }
      if (e < best_e) {
        best_e = e;
        best_l = l;
      }
    }
    const double v = std::max(std::exp(-best_e / static_cast<double>(T - 1)), std::numeric_limits<double>::min());
    trip.emplace_back(static_cast<int>(j), static_cast<int>(best_l), v);
  }
  K.attached = std::move(lost);

  K.matrix.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(nl));
  K.matrix.setFromTriplets(trip.begin(), trip.end());
  K.matrix.makeCompressed();
  return K;
}

}  // namespace driftscope
