#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "driftscope/dataset.hpp"
#include "driftscope/eigensolver.hpp"
#include "driftscope/errors.hpp"
#include "driftscope/kernel.hpp"
#include "driftscope/landmarks.hpp"
#include "driftscope/scalar_field.hpp"

namespace driftscope {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Spectral embedding of the diffusion operator. eigenvalues[l] is the
/// eigenvalue of the one-step operator W, i.e. the square root of the
/// corresponding eigenvalue of the two-step landmark operator. Eigenvectors
/// are right eigenvectors, orthonormal under the stationary distribution.
struct DiffusionEmbedding {
  std::vector<double> eigenvalues;  // m, non-increasing, within [0, 1]
  RowMatrix eigenvectors;           // n x m, particle-major
  std::vector<double> stationary;   // n, sums to one

  std::size_t size() const { return static_cast<std::size_t>(eigenvectors.rows()); }
  std::size_t modes() const { return eigenvalues.size(); }
};

/// Two-step landmark random walk W_l = D_r^-1 K D_c^-1 K^T (particle ->
/// landmark -> particle), where D_r and D_c hold the row and column sums of
/// K. With `renormalize`, K is first divided entrywise by the product of its
/// row and column sums to factor out sampling density.
class LandmarkOperator {
 public:
  LandmarkOperator(const SparseKernel& kernel, bool renormalize) : k_(kernel.matrix) {
    if (k_.rows() == 0 || k_.cols() == 0) throw ArgumentError("empty kernel");
    if (renormalize) {
      const Eigen::VectorXd r = row_sums_of(k_), c = col_sums_of(k_);
      check_positive(r, c);
      for (Eigen::Index col = 0; col < k_.outerSize(); ++col)
        for (Eigen::SparseMatrix<double>::InnerIterator it(k_, col); it; ++it)
          it.valueRef() /= r(it.row()) * c(it.col());
    }
    rows_ = row_sums_of(k_);
    cols_ = col_sums_of(k_);
    check_positive(rows_, cols_);
    factor_ = rows_.cwiseSqrt().cwiseInverse().asDiagonal() * k_ * cols_.cwiseSqrt().cwiseInverse().asDiagonal();
    factor_.makeCompressed();
  }

  Eigen::Index particles() const { return k_.rows(); }
  Eigen::Index landmarks() const { return k_.cols(); }

  /// Kernel after optional renormalization.
  const Eigen::SparseMatrix<double>& kernel() const { return k_; }
  const Eigen::VectorXd& row_sums() const { return rows_; }
  const Eigen::VectorXd& col_sums() const { return cols_; }

  /// B = D_r^-1/2 K D_c^-1/2; B B^T is W_l conjugated by D_r^1/2.
  const Eigen::SparseMatrix<double>& factor() const { return factor_; }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
    Eigen::VectorXd y = k_.transpose() * x;
    y = y.cwiseQuotient(cols_);
    Eigen::VectorXd z = k_ * y;
    return z.cwiseQuotient(rows_);
  }

  Eigen::VectorXd implied_row_sums() const { return apply(Eigen::VectorXd::Ones(particles())); }

  Eigen::VectorXd stationary() const { return rows_ / rows_.sum(); }

  /// Symmetric n_l x n_l matrix B^T B sharing W_l's nonzero spectrum.
  Eigen::MatrixXd reduced_matrix() const {
    Eigen::SparseMatrix<double> s = factor_.transpose() * factor_;
    return Eigen::MatrixXd(s);
  }

  /// Dense n x n W_l. Only for small problems.
  Eigen::MatrixXd dense() const {
    Eigen::MatrixXd kd(k_);
    return rows_.cwiseInverse().asDiagonal() * kd * cols_.cwiseInverse().asDiagonal() * kd.transpose();
  }

 private:
  static Eigen::VectorXd row_sums_of(const Eigen::SparseMatrix<double>& m) {
    return m * Eigen::VectorXd::Ones(m.cols());
  }
  static Eigen::VectorXd col_sums_of(const Eigen::SparseMatrix<double>& m) {
    return m.transpose() * Eigen::VectorXd::Ones(m.rows());
  }
  static void check_positive(const Eigen::VectorXd& r, const Eigen::VectorXd& c) {
    for (Eigen::Index i = 0; i < r.size(); ++i)
      if (!(r(i) > 0)) throw ConnectivityError("kernel row " + std::to_string(i) + " is empty");
    for (Eigen::Index i = 0; i < c.size(); ++i)
      if (!(c(i) > 0)) throw ConnectivityError("kernel column " + std::to_string(i) + " is empty");
  }

  Eigen::SparseMatrix<double> k_;
  Eigen::SparseMatrix<double> factor_;
  Eigen::VectorXd rows_;
  Eigen::VectorXd cols_;
};

enum class EigenSolverKind { automatic, dense, lanczos };

struct OperatorOptions {
  /// Retained eigenpairs; 0 means min(n_l, 300).
  std::size_t modes = 0;
  bool renormalize = true;
  EigenSolverKind solver = EigenSolverKind::automatic;
  /// Largest n_l solved densely under `automatic`.
  Eigen::Index dense_limit = 2000;
  LanczosOptions lanczos;
  /// Skip the single-component checks. Only meaningful for whole-subspace
  /// comparisons, where a repeated eigenvalue 1 is harmless.
  bool allow_disconnected = false;
};

inline constexpr std::size_t default_mode_cap = 300;

inline DiffusionEmbedding build_diffusion_operator(const LandmarkOperator& op, const OperatorOptions& opt = {}) {
  const Eigen::Index n = op.particles(), nl = op.landmarks();
  const auto want = static_cast<Eigen::Index>(
      opt.modes > 0 ? std::min<std::size_t>(opt.modes, static_cast<std::size_t>(nl))
                    : std::min<std::size_t>(default_mode_cap, static_cast<std::size_t>(nl)));

  const bool dense = opt.solver == EigenSolverKind::dense ||
                     (opt.solver == EigenSolverKind::automatic && nl <= opt.dense_limit);
  SymmetricEigenpairs pairs;
  if (dense) {
    pairs = dense_top_eigenpairs(op.reduced_matrix(), want);
  } else {
    const auto& B = op.factor();
    Eigen::VectorXd tmp(n);
    pairs = lanczos_top_eigenpairs(
        [&](const auto& x, Eigen::VectorXd& y) {
          tmp.noalias() = B * x;
          y.noalias() = B.transpose() * tmp;
        },
        nl, want, opt.lanczos);
  }

  // Drop modes whose lift B v / sqrt(mu) is numerically meaningless.
  const double mu0 = pairs.values.size() > 0 ? pairs.values(0) : 0.0;
  Eigen::Index m = 0;
  while (m < pairs.values.size() && pairs.values(m) > 1e-14 * std::max(mu0, 1.0)) ++m;
  if (m == 0) throw ConvergenceError("diffusion operator has no positive eigenvalues");

  const Eigen::VectorXd& r = op.row_sums();
  const double total = r.sum();
  const Eigen::VectorXd lift_scale = (r.cwiseSqrt().cwiseInverse()) * std::sqrt(total);

  DiffusionEmbedding E;
  E.eigenvalues.resize(static_cast<std::size_t>(m));
  E.eigenvectors.resize(n, m);
  const Eigen::MatrixXd lifted = op.factor() * pairs.vectors.leftCols(m);
  for (Eigen::Index l = 0; l < m; ++l) {
    const double mu = pairs.values(l);
    E.eigenvalues[static_cast<std::size_t>(l)] = std::sqrt(std::clamp(mu, 0.0, 1.0));
    Eigen::VectorXd u = lifted.col(l).cwiseProduct(lift_scale) / std::sqrt(mu);
    // Deterministic sign: the trivial mode is positive, the others have a
    // positive largest-magnitude entry.
    double sign = 1;
    if (l == 0) {
      sign = u.sum() < 0 ? -1 : 1;
    } else {
      Eigen::Index arg = 0;
      u.cwiseAbs().maxCoeff(&arg);
      sign = u(arg) < 0 ? -1 : 1;
    }
    E.eigenvectors.col(l) = sign * u;
  }
  const Eigen::VectorXd pi = op.stationary();
  E.stationary.assign(pi.data(), pi.data() + pi.size());

  if (opt.allow_disconnected) return E;
  if (std::abs(pairs.values(0) - 1.0) > 1e-10)
    throw ConvergenceError("leading eigenvalue " + std::to_string(pairs.values(0)) + " differs from 1");
  if (m > 1 && E.eigenvalues[1] >= 1.0 - 1e-8)
    throw MultiComponentError(
        "kernel graph has multiple connected components (second eigenvalue is 1); diffusion distances between "
        "components are undefined");
  const double umin = E.eigenvectors.col(0).minCoeff();
  if (!(umin > 0)) throw MultiComponentError("leading eigenvector changes sign; kernel graph is not connected");
  return E;
}

inline DiffusionEmbedding build_diffusion_operator(const SparseKernel& kernel, const OperatorOptions& opt = {}) {
  return build_diffusion_operator(LandmarkOperator(kernel, opt.renormalize), opt);
}

struct BuildOptions {
  BandwidthOptions bandwidth;
  double threshold = 1e-6;
  OrphanPolicy orphans = OrphanPolicy::error;
  OperatorOptions op;
};

struct EmbeddingBuild {
  BandwidthTable bandwidths;
  SparseKernel kernel;
  DiffusionEmbedding embedding;
  double kernel_seconds = 0;
  double eigen_seconds = 0;
};

/// Bandwidths, landmark kernel and spectral decomposition in one go.
inline EmbeddingBuild build_embedding(const TrajectoryDataset& ds, const LandmarkSet& lm,
                                      const BuildOptions& opt = {}) {
  using clock = std::chrono::steady_clock;
  EmbeddingBuild out;
  const auto t0 = clock::now();
  out.bandwidths = compute_bandwidths(ds, lm, opt.bandwidth);
  out.kernel = build_landmark_kernel(ds, lm, out.bandwidths, opt.threshold, opt.orphans);
  const auto t1 = clock::now();
  out.embedding = build_diffusion_operator(out.kernel, opt.op);
  const auto t2 = clock::now();
  out.kernel_seconds = std::chrono::duration<double>(t1 - t0).count();
  out.eigen_seconds = std::chrono::duration<double>(t2 - t1).count();
  return out;
}

// ---------------------------------------------------------------------------
// Queries. All are pure reads of the embedding.

/// lambda_l^s for every retained mode, with the trivial mode zeroed.
inline std::vector<double> scale_weights(const DiffusionEmbedding& E, double s) {
  if (!(s >= 0)) throw ArgumentError("scale must be non-negative");
  std::vector<double> w(E.modes(), 0.0);
  for (std::size_t l = 1; l < w.size(); ++l) w[l] = std::pow(E.eigenvalues[l], s);
  return w;
}

inline void check_particle(const DiffusionEmbedding& E, std::size_t i) {
  if (i >= E.size()) throw ArgumentError("particle index " + std::to_string(i) + " out of range");
}

/// Phi_s(i): (lambda_l^s u^l_i) for l >= 1.
inline std::vector<double> embedding(const DiffusionEmbedding& E, std::size_t i, double s) {
  check_particle(E, i);
  const auto w = scale_weights(E, s);
  std::vector<double> out(w.size() > 0 ? w.size() - 1 : 0);
  for (std::size_t l = 1; l < w.size(); ++l)
    out[l - 1] = w[l] * E.eigenvectors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l));
  return out;
}

namespace detail {
inline double weighted_distance2(const DiffusionEmbedding& E, std::span<const double> w, std::size_t i, std::size_t j) {
  const double* a = E.eigenvectors.row(static_cast<Eigen::Index>(i)).data();
  const double* b = E.eigenvectors.row(static_cast<Eigen::Index>(j)).data();
  double s = 0;
  for (std::size_t l = 1; l < w.size(); ++l) {
    const double t = w[l] * (a[l] - b[l]);
    s += t * t;
  }
  return s;
}
inline double weighted_norm2(const DiffusionEmbedding& E, std::span<const double> w, std::size_t i) {
  const double* a = E.eigenvectors.row(static_cast<Eigen::Index>(i)).data();
  double s = 0;
  for (std::size_t l = 1; l < w.size(); ++l) s += (w[l] * a[l]) * (w[l] * a[l]);
  return s;
}
}  // namespace detail

inline double diffusion_distance(const DiffusionEmbedding& E, std::size_t i, std::size_t j, double s) {
  check_particle(E, i);
  check_particle(E, j);
  const auto w = scale_weights(E, s);
  return std::sqrt(detail::weighted_distance2(E, w, i, j));
}

struct NormalizedDistance {
  double value = 0;
  /// Both embeddings vanished (extreme scale); value is 0 by convention.
  bool degenerate = false;
};

/// d_s^2 / (|Phi_s(i)|^2 + |Phi_s(j)|^2), in [0, 2].
inline NormalizedDistance normalized_diffusion_distance(const DiffusionEmbedding& E, std::size_t i, std::size_t j,
                                                        double s) {
  check_particle(E, i);
  check_particle(E, j);
  const auto w = scale_weights(E, s);
  const double denom = detail::weighted_norm2(E, w, i) + detail::weighted_norm2(E, w, j);
  if (!(denom > std::numeric_limits<double>::min())) return {0.0, true};
  return {detail::weighted_distance2(E, w, i, j) / denom, false};
}

/// d_s from particle i to every particle.
inline std::vector<double> distances_from(const DiffusionEmbedding& E, std::size_t i, double s) {
  check_particle(E, i);
  const auto w = scale_weights(E, s);
  std::vector<double> out(E.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t sj = 0; sj < static_cast<std::ptrdiff_t>(E.size()); ++sj)
    out[static_cast<std::size_t>(sj)] = std::sqrt(detail::weighted_distance2(E, w, i, static_cast<std::size_t>(sj)));
  return out;
}

/// Per particle, the smallest diffusion distance to any source.
inline ScalarField distance_field(const DiffusionEmbedding& E, std::span<const std::size_t> sources, double s) {
  if (sources.empty()) throw ArgumentError("distance field needs at least one source");
  for (auto src : sources) check_particle(E, src);
  const auto w = scale_weights(E, s);
  ScalarField f;
  f.kind = FieldKind::distance;
  f.scale = s;
  f.sources.assign(sources.begin(), sources.end());
  f.values.assign(E.size(), std::numeric_limits<double>::infinity());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t sj = 0; sj < static_cast<std::ptrdiff_t>(E.size()); ++sj) {
    const auto j = static_cast<std::size_t>(sj);
    double best = std::numeric_limits<double>::infinity();
    for (auto src : sources) best = std::min(best, detail::weighted_distance2(E, w, src, j));
    f.values[j] = std::sqrt(best);
  }
  return f;
}

}  // namespace driftscope
