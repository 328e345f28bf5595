#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "driftscope/landmarks.hpp"
#include "support/fixtures.hpp"

using namespace driftscope;

TEST(Landmarks, ParsesStrategyNames) {
  EXPECT_EQ(parse_landmark_strategy("random"), LandmarkStrategy::random);
  EXPECT_EQ(parse_landmark_strategy("fps"), LandmarkStrategy::fps);
  EXPECT_EQ(parse_landmark_strategy("tfps"), LandmarkStrategy::tfps);
  EXPECT_EQ(parse_landmark_strategy("t-fps"), LandmarkStrategy::tfps);
  EXPECT_THROW(parse_landmark_strategy("blue-noise"), ConfigError);
}

TEST(Landmarks, AllParticlesIsAPermutation) {
  const auto ds = fixture::random_walks(40, 6, 2, 2);
  for (auto s : {LandmarkStrategy::random, LandmarkStrategy::fps, LandmarkStrategy::tfps}) {
    auto idx = select_landmarks(ds, 40, s, 3, 2).indices;
    std::sort(idx.begin(), idx.end());
    for (std::size_t i = 0; i < idx.size(); ++i) EXPECT_EQ(idx[i], i) << to_string(s);
  }
}

TEST(Landmarks, SecondPickIsTheFarthest) {
  const auto ds = fixture::static_dataset({0, 0, 1, 0, 10, 0}, 2, fixture::uniform_times(3));
  const std::vector<std::size_t> all_steps{0, 1, 2};
  const auto picks = farthest_point_sampling(ds, 3, 0, all_steps);
  EXPECT_EQ(picks, (std::vector<std::size_t>{0, 2, 1}));
}

TEST(Landmarks, TfpsUsesOnlySubsampledSteps) {
  // Particle 1 stays near particle 0 except at step 3, which a stride of 5
  // never visits; particle 2 is moderately far everywhere.
  const std::size_t T = 100;
  std::vector<double> pos(3 * T * 2, 0.0);
  for (std::size_t k = 0; k < T; ++k) {
    pos[(1 * T + k) * 2] = k == 3 ? 1000.0 : 0.1;
    pos[(2 * T + k) * 2] = 1.0;
  }
  const TrajectoryDataset ds(3, 2, fixture::uniform_times(T), pos);
  const auto steps = subsampled_steps(T, 5);
  EXPECT_EQ(steps.size(), 20u);
  EXPECT_EQ(steps.back(), 95u);
  EXPECT_EQ(farthest_point_sampling(ds, 2, 0, steps)[1], 2u);
  const auto every = subsampled_steps(T, 1);
  EXPECT_EQ(farthest_point_sampling(ds, 2, 0, every)[1], 1u);
}

// After each round the pick must maximize the minimum distance to the
// chosen set, checked against an exhaustive recomputation.
TEST(LandmarksProperty, GreedyMaxMinInvariant) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const auto ds = fixture::random_walks(120 + 40 * seed, 8, seed % 2 ? 3 : 2, seed);
    const auto steps = subsampled_steps(ds.steps(), 1 + seed % 3);
    const auto picks = farthest_point_sampling(ds, 25, seed, steps);
    std::set<std::size_t> chosen{picks[0]};
    for (std::size_t r = 1; r < picks.size(); ++r) {
      double best = -1;
      for (std::size_t j = 0; j < ds.size(); ++j) {
        if (chosen.count(j)) continue;
        double m = std::numeric_limits<double>::infinity();
        for (auto c : chosen) m = std::min(m, dynamic_distance(ds, j, c, steps));
        best = std::max(best, m);
      }
      double got = std::numeric_limits<double>::infinity();
      for (auto c : chosen) got = std::min(got, dynamic_distance(ds, picks[r], c, steps));
      EXPECT_FALSE(chosen.count(picks[r]));
      EXPECT_NEAR(got, best, 1e-12 * std::max(1.0, best)) << "seed " << seed << " round " << r;
      chosen.insert(picks[r]);
    }
  }
}

TEST(Landmarks, DeterministicPerSeed) {
  const auto ds = fixture::random_walks(200, 10, 2, 9);
  for (auto s : {LandmarkStrategy::random, LandmarkStrategy::fps, LandmarkStrategy::tfps}) {
    const auto a = select_landmarks(ds, 30, s, 17, 3), b = select_landmarks(ds, 30, s, 17, 3);
    EXPECT_EQ(a.indices, b.indices);
    EXPECT_EQ(std::set<std::size_t>(a.indices.begin(), a.indices.end()).size(), 30u);
  }
  EXPECT_NE(select_landmarks(ds, 30, LandmarkStrategy::random, 1).indices,
            select_landmarks(ds, 30, LandmarkStrategy::random, 2).indices);
}

TEST(Landmarks, TfpsWithUnitStrideEqualsFps) {
  const auto ds = fixture::random_walks(150, 9, 2, 5);
  const auto a = select_landmarks(ds, 20, LandmarkStrategy::fps, 4, 7);
  const auto b = select_landmarks(ds, 20, LandmarkStrategy::tfps, 4, 1);
  EXPECT_EQ(a.indices, b.indices);
  EXPECT_EQ(a.stride, 1u);
}

TEST(Landmarks, RejectsBadCounts) {
  const auto ds = fixture::random_walks(10, 3, 2, 1);
  EXPECT_THROW(select_landmarks(ds, 0, LandmarkStrategy::fps, 1), ArgumentError);
  EXPECT_THROW(select_landmarks(ds, 11, LandmarkStrategy::random, 1), ArgumentError);
  EXPECT_THROW(select_landmarks(ds, 3, LandmarkStrategy::tfps, 1, 0), ArgumentError);
}
