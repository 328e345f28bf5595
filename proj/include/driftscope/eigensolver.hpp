#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "driftscope/errors.hpp"

namespace driftscope {

/// Leading eigenpairs of a symmetric matrix, eigenvalues descending.
struct SymmetricEigenpairs {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;  // one eigenvector per column
};

/// Largest k eigenpairs of a dense symmetric matrix (only the lower
/// triangle is read).
inline SymmetricEigenpairs dense_top_eigenpairs(const Eigen::MatrixXd& a, Eigen::Index k) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n) throw ArgumentError("matrix is not square");
  k = std::clamp<Eigen::Index>(k, 0, n);
  SymmetricEigenpairs out;
  if (k == 0) return out;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  if (es.info() != Eigen::Success) throw ConvergenceError("dense symmetric eigensolver failed");
  // Ascending order from the solver.
  out.values = es.eigenvalues().tail(k).reverse();
  out.vectors = es.eigenvectors().rightCols(k).rowwise().reverse();
  return out;
}

struct LanczosOptions {
  /// Krylov subspace size; 0 picks max(2k + 20, k + 64) bounded by n.
  Eigen::Index subspace = 0;
  double tolerance = 1e-11;
  int max_restarts = 500;
  std::uint64_t seed = 0x5eed;
};

/// Largest k eigenpairs of a symmetric operator given only through products
/// y = A x. Thick-restart Lanczos (symmetric Krylov-Schur) with full
/// reorthogonalization. `apply(x, y)` must write A*x into y.
template <class ApplyFn>
SymmetricEigenpairs lanczos_top_eigenpairs(ApplyFn&& apply, Eigen::Index n, Eigen::Index k,
                                           const LanczosOptions& opt = {}) {
  using Eigen::Index;
  using Eigen::MatrixXd;
  using Eigen::VectorXd;
  if (k <= 0) return {};
  if (k > n) throw ArgumentError("requested more eigenpairs than the operator dimension");
  Index m = opt.subspace > 0 ? opt.subspace : std::max<Index>(2 * k + 20, k + 64);
  m = std::min(m, n);
  if (m <= k) {
    // Krylov space equals the whole space: a dense solve is exact.
    MatrixXd dense(n, n);
    VectorXd e = VectorXd::Zero(n), col(n);
    for (Index j = 0; j < n; ++j) {
      e.setZero();
      e(j) = 1;
      apply(e, col);
      dense.col(j) = col;
    }
    dense = 0.5 * (dense + dense.transpose()).eval();
    return dense_top_eigenpairs(std::move(dense), k);
  }

  MatrixXd V(n, m + 1);
  MatrixXd H = MatrixXd::Zero(m + 1, m);
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> gauss;
  VectorXd v0(n);
  for (Index i = 0; i < n; ++i) v0(i) = gauss(rng);
  V.col(0) = v0.normalized();

  VectorXd w(n), coeff;
  Index start = 0;  // number of locked-in basis vectors carried across a restart
  double anorm = 0;

  auto expand = [&](Index from) {
    for (Index j = from; j < m; ++j) {
      apply(V.col(j), w);
      // Two passes of classical Gram-Schmidt against the whole basis.
      coeff = V.leftCols(j + 1).transpose() * w;
      w.noalias() -= V.leftCols(j + 1) * coeff;
      VectorXd c2 = V.leftCols(j + 1).transpose() * w;
      w.noalias() -= V.leftCols(j + 1) * c2;
      coeff += c2;
      H.col(j).head(j + 1) = coeff;
      double beta = w.norm();
      anorm = std::max(anorm, std::abs(coeff(j)) + beta);
      if (beta <= 1e-14 * std::max(anorm, 1.0)) {
        // Invariant subspace: continue with a fresh random direction.
        VectorXd r(n);
        for (Index i = 0; i < n; ++i) r(i) = gauss(rng);
        r.noalias() -= V.leftCols(j + 1) * (V.leftCols(j + 1).transpose() * r);
        r.noalias() -= V.leftCols(j + 1) * (V.leftCols(j + 1).transpose() * r);
        V.col(j + 1) = r.normalized();
        H(j + 1, j) = 0;
      } else {
        V.col(j + 1) = w / beta;
        H(j + 1, j) = beta;
      }
    }
  };

  for (int restart = 0; restart <= opt.max_restarts; ++restart) {
    expand(start);
    // Rayleigh quotient on the m-dimensional basis (symmetric in exact arithmetic).
    MatrixXd proj = H.topRows(m);
    proj = 0.5 * (proj + proj.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(proj);
    // Descending order.
    VectorXd theta = es.eigenvalues().reverse();
    MatrixXd Y = es.eigenvectors().rowwise().reverse();
    const double beta = H(m, m - 1);

    Index converged = 0;
    for (Index i = 0; i < k; ++i) {
      const double resid = std::abs(beta * Y(m - 1, i));
      if (resid <= opt.tolerance * std::max(anorm, 1e-300))
        ++converged;
      else
        break;
    }
    if (converged == k) {
      SymmetricEigenpairs out;
      out.values = theta.head(k);
      out.vectors = V.leftCols(m) * Y.leftCols(k);
      return out;
    }

    // Thick restart: keep the leading Ritz vectors plus the residual direction.
    const Index keep = std::min<Index>(m - 1, std::max<Index>(k + (m - k) / 2, converged + 1));
    MatrixXd kept = V.leftCols(m) * Y.leftCols(keep);
    VectorXd resid_dir = V.col(m);
    V.leftCols(keep) = kept;
    V.col(keep) = resid_dir;
    H.setZero();
    for (Index i = 0; i < keep; ++i) {
      H(i, i) = theta(i);
      H(keep, i) = beta * Y(m - 1, i);
    }
    // Column `keep` of H is rebuilt by expand() from the true inner products.
    start = keep;
  }
  throw ConvergenceError("Lanczos did not converge for " + std::to_string(k) + " eigenpairs");
}

}  // namespace driftscope
