#include <gtest/gtest.h>

#include <algorithm>

#include "driftscope/landmark_eval.hpp"
#include "support/fixtures.hpp"

using namespace driftscope;

TEST(SubspaceError, IdenticalAndOrthogonalSpans) {
  std::srand(4);
  const Eigen::MatrixXd a = Eigen::MatrixXd::Random(40, 6);
  // Same span, different basis.
  const Eigen::MatrixXd mix = Eigen::MatrixXd::Random(6, 6) + 6 * Eigen::MatrixXd::Identity(6, 6);
  EXPECT_LT(subspace_error(a * mix, a), 1e-12);
  Eigen::MatrixXd e1 = Eigen::MatrixXd::Zero(40, 3), e2 = Eigen::MatrixXd::Zero(40, 3);
  for (int q = 0; q < 3; ++q) {
    e1(q, q) = 1;
    e2(10 + q, q) = 1;
  }
  EXPECT_NEAR(subspace_error(e2, e1), 1.0, 1e-14);
}

TEST(SubspaceError, MatchesPrincipalAngleOracle) {
  std::srand(5);
  for (int rep = 0; rep < 10; ++rep) {
    const int ka = 2 + rep % 4, kr = 3 + rep % 3;
    const Eigen::MatrixXd a = Eigen::MatrixXd::Random(30, ka), r = Eigen::MatrixXd::Random(30, kr);
    // Independent path: SVD bases and principal-angle cosines.
    const Eigen::MatrixXd ua = Eigen::JacobiSVD<Eigen::MatrixXd>(a, Eigen::ComputeThinU).matrixU();
    const Eigen::MatrixXd ur = Eigen::JacobiSVD<Eigen::MatrixXd>(r, Eigen::ComputeThinU).matrixU();
    const Eigen::VectorXd cosines = Eigen::JacobiSVD<Eigen::MatrixXd>(ur.transpose() * ua).singularValues();
    const double ref = std::sqrt((ka - cosines.squaredNorm()) / kr);
    EXPECT_NEAR(subspace_error(a, r), ref, 1e-10) << rep;
  }
}

TEST(SubspaceError, RejectsMismatchedInputs) {
  EXPECT_THROW(subspace_error(Eigen::MatrixXd::Ones(4, 2), Eigen::MatrixXd::Ones(5, 2)), ArgumentError);
  EXPECT_THROW(subspace_error(Eigen::MatrixXd::Ones(4, 2), Eigen::MatrixXd(4, 0)), ArgumentError);
}

TEST(LandmarkEval, AllParticlesReproduceTheReference) {
  const auto ds = fixture::small_gyre(12, 6, 8);
  EvalConfig cfg;
  cfg.strategies = {LandmarkStrategy::random};
  cfg.landmark_counts = {ds.size()};
  cfg.subspaces = {5, 20};
  cfg.trials = 2;
  const auto rep = eval_landmarks(ds, cfg);
  ASSERT_EQ(rep.rows.size(), 4u);
  for (const auto& row : rep.rows) EXPECT_LT(row.error, 1e-6) << row.subspace;
}

TEST(LandmarkEval, ReportsEveryCombination) {
  const auto ds = fixture::small_gyre(16, 8, 8);
  EvalConfig cfg;
  cfg.landmark_counts = {30, 60};
  cfg.subspaces = {5, 10};
  cfg.trials = 3;
  const auto rep = eval_landmarks(ds, cfg);
  EXPECT_EQ(rep.rows.size(), 3u * 2 * 2 * 3);
  for (const auto& row : rep.rows) {
    EXPECT_GE(row.error, 0.0);
    EXPECT_LE(row.error, 1.0 + 1e-12);
  }
  const auto sum = summarize(rep.rows);
  EXPECT_EQ(sum.size(), 3u * 2 * 2);
  for (const auto& g : sum) {
    std::vector<double> errs;
    for (const auto& row : rep.rows)
      if (row.strategy == g.strategy && row.landmarks == g.landmarks && row.subspace == g.subspace)
        errs.push_back(row.error);
    ASSERT_EQ(errs.size(), 3u);
    std::sort(errs.begin(), errs.end());
    EXPECT_EQ(g.median_error, errs[1]);
  }
}

TEST(Median, OddEvenAndEmpty) {
  EXPECT_EQ(median({3, 1, 2}), 2.0);
  EXPECT_EQ(median({4, 1, 3, 2}), 2.5);
  EXPECT_THROW(median({}), ArgumentError);
}
