#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "driftscope/dataset.hpp"
#include "driftscope/diffusion.hpp"
#include "driftscope/errors.hpp"
#include "driftscope/landmarks.hpp"

namespace driftscope {

/// ||(I - Q Q^T) Q_l||_F / ||Q||_F where Q and Q_l are orthonormal bases of
/// the column spans of `reference` and `approx`.
inline double subspace_error(const Eigen::MatrixXd& approx, const Eigen::MatrixXd& reference) {
  if (approx.rows() != reference.rows())
    throw ArgumentError("subspace bases have " + std::to_string(approx.rows()) + " and " +
                        std::to_string(reference.rows()) + " rows");
  if (reference.cols() == 0) throw ArgumentError("reference subspace is empty");
  auto basis = [](const Eigen::MatrixXd& a) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    return Eigen::MatrixXd(qr.householderQ() * Eigen::MatrixXd::Identity(a.rows(), a.cols()));
  };
  const Eigen::MatrixXd q = basis(reference);
  const Eigen::MatrixXd ql = basis(approx);
  const Eigen::MatrixXd resid = ql - q * (q.transpose() * ql);
  return resid.norm() / q.norm();
}

struct EvalConfig {
  std::vector<LandmarkStrategy> strategies{LandmarkStrategy::random, LandmarkStrategy::fps, LandmarkStrategy::tfps};
  std::vector<std::size_t> landmark_counts{250, 500, 1000};
  std::vector<std::size_t> subspaces{50, 150, 250};
  std::size_t trials = 10;
  std::uint64_t seed = 1;
  std::size_t stride = 5;
  /// Random landmark sets routinely leave wall-bound particles without any
  /// affinity, or split the graph into islands. Evaluation attaches orphans
  /// and keeps disconnected spectra; a split set then shows up as a large
  /// subspace error rather than an abort.
  BuildOptions build = [] {
    BuildOptions b;
    b.orphans = OrphanPolicy::attach;
    b.op.allow_disconnected = true;
    return b;
  }();
};

struct EvalRow {
  LandmarkStrategy strategy;
  std::size_t landmarks;
  std::size_t subspace;
  std::size_t trial;
  double error;
  double select_seconds;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  double reference_seconds = 0;
};

/// Compares landmark embeddings against the all-particle embedding. Each
/// trial draws every strategy with the same seed (config.seed + trial).
inline EvalReport eval_landmarks(const TrajectoryDataset& ds, const EvalConfig& config) {
  using clock = std::chrono::steady_clock;
  if (config.subspaces.empty() || config.landmark_counts.empty() || config.strategies.empty())
    throw ArgumentError("evaluation grid is empty");
  const std::size_t max_sub = *std::max_element(config.subspaces.begin(), config.subspaces.end());

  BuildOptions opt = config.build;
  opt.op.modes = max_sub;
  EvalReport report;
  const auto t0 = clock::now();
  const auto ref = build_embedding(ds, all_particles(ds.size()), opt).embedding;
  report.reference_seconds = std::chrono::duration<double>(clock::now() - t0).count();

  for (std::size_t trial = 0; trial < config.trials; ++trial) {
    for (auto nl : config.landmark_counts) {
      for (auto strategy : config.strategies) {
        const auto s0 = clock::now();
        const auto lm = select_landmarks(ds, nl, strategy, config.seed + trial, config.stride);
        const double sel = std::chrono::duration<double>(clock::now() - s0).count();
        const auto emb = build_embedding(ds, lm, opt).embedding;
        for (auto sub : config.subspaces) {
          const auto kr = static_cast<Eigen::Index>(std::min<std::size_t>(sub, ref.modes()));
          const auto ka = static_cast<Eigen::Index>(std::min<std::size_t>(sub, emb.modes()));
          const double err = subspace_error(emb.eigenvectors.leftCols(ka), ref.eigenvectors.leftCols(kr));
          report.rows.push_back({strategy, nl, sub, trial, err, sel});
        }
      }
    }
  }
  return report;
}

struct EvalSummary {
  LandmarkStrategy strategy;
  std::size_t landmarks;
  std::size_t subspace;
  double median_error;
  double median_select_seconds;
};

inline double median(std::vector<double> v) {
  if (v.empty()) throw ArgumentError("median of an empty set");
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

/// Medians over trials per (strategy, n_l, subspace).
inline std::vector<EvalSummary> summarize(const std::vector<EvalRow>& rows) {
  std::map<std::tuple<int, std::size_t, std::size_t>, std::pair<std::vector<double>, std::vector<double>>> groups;
  for (const auto& r : rows) {
    auto& g = groups[{static_cast<int>(r.strategy), r.landmarks, r.subspace}];
    g.first.push_back(r.error);
    g.second.push_back(r.select_seconds);
  }
  std::vector<EvalSummary> out;
  for (const auto& [key, g] : groups)
    out.push_back({static_cast<LandmarkStrategy>(std::get<0>(key)), std::get<1>(key), std::get<2>(key),
                   median(g.first), median(g.second)});
  return out;
}

}  // namespace driftscope
