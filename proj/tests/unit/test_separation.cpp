#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "driftscope/diffusion.hpp"
#include "driftscope/separation.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace driftscope;

namespace {

/// Largest eigenvalue of C = sum_j o_j o_j^T assembled explicitly in the
/// stacked ((T-1) d)-dimensional space.
double direct_covariance_top(const TrajectoryDataset& ds, std::size_t i, std::span<const std::size_t> nbrs,
                             std::size_t anchor) {
  const std::size_t T = ds.steps(), d = ds.dim();
  const auto D = static_cast<Eigen::Index>((T - 1) * d);
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(D, D);
  for (auto j : nbrs) {
    Eigen::VectorXd o(D);
    Eigen::Index r = 0;
    for (std::size_t t = 0; t < T; ++t) {
      if (t == anchor) continue;
      for (std::size_t c = 0; c < d; ++c) o(r++) = ds.position(j, t)[c] - ds.position(i, t)[c];
    }
    C += o * o.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

struct GyreCase {
  TrajectoryDataset ds;
  DiffusionEmbedding E;
};

const GyreCase& coarse_gyre() {
  static const GyreCase g = [] {
    auto flow = make_flow(FlowId::double_gyre, {60, 30});
    flow.steps = 40;
    auto ds = integrate_flow(flow);
    BuildOptions opt;
    opt.op.modes = 300;
    auto E = build_embedding(ds, select_landmarks(ds, 900, LandmarkStrategy::tfps, 1, 5), opt).embedding;
    return GyreCase{std::move(ds), std::move(E)};
  }();
  return g;
}

}  // namespace

TEST(ParticleSeparation, StaticLatticeInterior) {
  const auto ds = fixture::static_lattice(5, 5);
  const auto f = particle_separation(ds, Direction::forward, 8);
  EXPECT_NEAR(f.values[12], std::log(6.0), 1e-12);
  EXPECT_EQ(f.kind, FieldKind::particle_separation);
  EXPECT_EQ(*f.neighbors, 8u);
  EXPECT_EQ(*f.direction, Direction::forward);
}

TEST(ParticleSeparation, GramShortcutMatchesDirectCovariance) {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const auto ds = fixture::random_walks(70, 5 + seed, seed % 2 ? 3 : 2, seed);
    for (auto dir : {Direction::forward, Direction::backward}) {
      const std::size_t k = default_separation_neighbors(ds.dim());
      const auto f = particle_separation(ds, dir);
      const auto nn = spatial_knn(ds, dir, k);
      for (std::size_t i = 0; i < ds.size(); i += 5) {
        const double ref = std::log(direct_covariance_top(ds, i, nn.of(i), anchor_step(ds, dir))) / ds.duration();
        EXPECT_NEAR(f.values[i], ref, 1e-9 * std::max(1.0, std::abs(ref)));
      }
    }
  }
}

TEST(ParticleSeparation, InvariantUnderRigidMotion) {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const auto ds = fixture::random_walks(90, 6, seed % 2 ? 3 : 2, 50 + seed);
    const auto moved = oracle::rigid_motion(ds, seed);
    for (auto dir : {Direction::forward, Direction::backward}) {
      const auto a = particle_separation(ds, dir), b = particle_separation(moved, dir);
      for (std::size_t i = 0; i < ds.size(); ++i) EXPECT_NEAR(a.values[i], b.values[i], 1e-9);
    }
  }
}

TEST(ParticleSeparation, BackwardIsForwardOnReversedTime) {
  const auto ds = fixture::random_walks(60, 7, 2, 4);
  const auto a = particle_separation(ds, Direction::backward);
  const auto b = particle_separation(time_reversed(ds), Direction::forward);
  for (std::size_t i = 0; i < ds.size(); ++i) EXPECT_NEAR(a.values[i], b.values[i], 1e-12);
}

TEST(ParticleSeparation, TooFewNeighborsIsDegenerate) {
  const auto ds = fixture::random_walks(20, 3, 3, 1);
  EXPECT_THROW(particle_separation(ds, Direction::forward, 2), DegenerateNeighborhoodError);
  const auto flat = fixture::static_lattice(4, 4);
  EXPECT_THROW(particle_separation(flat, Direction::forward, 1), DegenerateNeighborhoodError);
  // Coincident neighbors give a zero covariance, floored rather than -inf.
  const auto same = fixture::static_dataset(std::vector<double>(2 * 12, 1.0), 2, fixture::uniform_times(3));
  for (double v : particle_separation(same, Direction::forward).values) EXPECT_TRUE(std::isfinite(v));
}

TEST(DiffusionSeparation, RigidMotionInvariance) {
  const auto ds = fixture::small_gyre(20, 10, 12);
  const auto moved = oracle::rigid_motion(ds, 8);
  const auto lm = select_landmarks(ds, 100, LandmarkStrategy::tfps, 2, 3);
  BuildOptions opt;
  opt.op.modes = 100;
  const auto a = build_embedding(ds, lm, opt).embedding, b = build_embedding(moved, lm, opt).embedding;
  for (auto dir : {Direction::forward, Direction::backward})
    for (double s : {1.0, 10.0}) {
      const auto fa = diffusion_separation(ds, a, s, dir), fb = diffusion_separation(moved, b, s, dir);
      for (std::size_t i = 0; i < ds.size(); ++i) EXPECT_NEAR(fa.values[i], fb.values[i], 1e-9);
    }
}

TEST(DiffusionSeparation, SmallScaleRanksLikeParticleSeparation) {
  const auto& g = coarse_gyre();
  const auto gamma = particle_separation(g.ds, Direction::forward);
  const auto gamma_s = diffusion_separation(g.ds, g.E, 1, Direction::forward);
  EXPECT_GE(oracle::spearman(gamma.values, gamma_s.values), 0.7);
  EXPECT_EQ(*gamma_s.scale, 1.0);
}

TEST(DiffusionSeparation, LargerScalesFilterWeakRidges) {
  // Particles whose normalized gamma_s exceeds a fixed level, away from the
  // central separatrix, may only become fewer as the scale grows.
  const auto& g = coarse_gyre();
  std::size_t prev = std::numeric_limits<std::size_t>::max();
  for (double s : {28.0, 78.0, 145.0}) {
    const auto f = opacity_map(diffusion_separation(g.ds, g.E, s, Direction::forward), 1.0);
    std::size_t off_ridge = 0;
    for (std::size_t i = 0; i < g.ds.size(); ++i)
      if (f.values[i] > 0.5 && std::abs(g.ds.position(i, 0)[0] - 1.0) > 0.15) ++off_ridge;
    EXPECT_LE(off_ridge, prev) << "scale " << s;
    prev = off_ridge;
  }
}

TEST(DiffusionSeparation, RejectsForeignEmbedding) {
  const auto& g = coarse_gyre();
  const auto other = fixture::random_walks(10, 3, 2, 1);
  EXPECT_THROW(diffusion_separation(other, g.E, 1, Direction::forward), ArgumentError);
}

TEST(Ftle, LinearAndIdentityMaps) {
  const SeedGrid grid{{6, 5}, {0, 0}, {1, 2}};
  std::vector<double> doubled, same;
  for (std::size_t i = 0; i < grid.count(); ++i) {
    const auto p = grid.seed(i);
    doubled.insert(doubled.end(), {2 * p[0], 2 * p[1]});
    same.insert(same.end(), {p[0], p[1]});
  }
  for (double v : ftle_from_images(grid, doubled, 1, 1.0).values) EXPECT_NEAR(v, std::log(2.0), 1e-12);
  for (double v : ftle_from_images(grid, same, 1, 1.0).values) EXPECT_NEAR(v, 0.0, 1e-12);
  for (double v : ftle_from_images(grid, doubled, 1, 4.0).values) EXPECT_NEAR(v, std::log(2.0) / 4, 1e-12);
  EXPECT_THROW(ftle_from_images(grid, same, 2, 1.0), ArgumentError);
  EXPECT_THROW(ftle_from_images(grid, same, 1, 0.0), ArgumentError);
}

TEST(Ftle, DoubleGyreRidgeIsStableUnderRefinement) {
  // Nested grids: the refined spacing is exactly half the coarse spacing.
  auto coarse = make_flow(FlowId::double_gyre, {120, 60});
  auto fine = make_flow(FlowId::double_gyre, {239, 119});
  coarse.steps = fine.steps = 2;
  const auto A = grid_ftle(coarse, false), B = grid_ftle(fine, false);
  auto ridge_x = [](const GridField& F, std::size_t row) {
    const std::size_t nx = F.grid.resolution[0];
    double best = -1e300, at = 0;
    for (std::size_t x = 0; x < nx; ++x) {
      const double cx = F.grid.coordinate(0, x);
      if (cx < 0.8 || cx > 1.2) continue;
      if (F.values[row * nx + x] > best) {
        best = F.values[row * nx + x];
        at = cx;
      }
    }
    return at;
  };
  const double cell = coarse.grid.spacing(0);
  for (std::size_t row = 1; row + 1 < 60; ++row) {
    const double xa = ridge_x(A, row), xb = ridge_x(B, 2 * row);
    EXPECT_LE(std::abs(xa - xb), cell + 1e-12) << "row " << row;
    // Below the top wall band, where it folds over, the ridge follows the
    // central separatrix.
    const double y = coarse.grid.coordinate(1, row);
    if (y < 0.9) {
      EXPECT_NEAR(xa, 1.0, 0.15) << "row " << row;
    }
  }
}

TEST(Ftle, TimeAveragedStacksEveryStep) {
  auto flow = make_flow(FlowId::double_gyre, {12, 6});
  flow.steps = 5;
  const auto plain = grid_ftle(flow, false), avg = grid_ftle(flow, true);
  ASSERT_EQ(plain.values.size(), avg.values.size());
  // Stacking more blocks can only grow J^T J.
  for (std::size_t i = 0; i < avg.values.size(); ++i) EXPECT_GE(avg.values[i], plain.values[i] - 1e-12);
}

TEST(Density, EquidistantNeighbors) {
  const double r = 0.37;
  std::vector<double> pts{0, 0};
  for (int q = 0; q < 6; ++q) {
    const double a = q * std::numbers::pi / 3;
    pts.insert(pts.end(), {r * std::cos(a), r * std::sin(a)});
  }
  const auto ds = fixture::static_dataset(pts, 2, fixture::uniform_times(2));
  const auto f = knn_log_density(ds, 0, 6);
  EXPECT_NEAR(f.values[0], std::log(6 / r), 1e-12);
  EXPECT_EQ(*f.time_index, 0u);
}

TEST(Density, DenserClusterScoresHigher) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0, 1);
  std::vector<double> pts;
  for (int i = 0; i < 200; ++i) pts.insert(pts.end(), {0.05 * g(rng), 0.05 * g(rng)});
  for (int i = 0; i < 200; ++i) pts.insert(pts.end(), {10 + g(rng), g(rng)});
  const auto ds = fixture::static_dataset(pts, 2, fixture::uniform_times(2));
  const auto f = knn_log_density(ds, 1);
  EXPECT_EQ(*f.neighbors, 27u);
  // The nearest neighbor dominates the sum, so single points can spike;
  // compare typical values.
  auto median = [](std::vector<double> v) {
    std::nth_element(v.begin(), v.begin() + 100, v.end());
    return v[100];
  };
  const double dense = median({f.values.begin(), f.values.begin() + 200});
  const double sparse = median({f.values.begin() + 200, f.values.end()});
  EXPECT_GT(dense, sparse + std::log(10.0));
  EXPECT_THROW(knn_log_density(ds, 2), ArgumentError);
  EXPECT_THROW(knn_log_density(ds, 0, 400), ArgumentError);
}

TEST(Opacity, RescalesPowersAndInverts) {
  ScalarField f;
  f.values = {2, 4, 6};
  const auto o = opacity_map(f, 2);
  EXPECT_EQ(o.kind, FieldKind::opacity);
  EXPECT_DOUBLE_EQ(o.values[0], 0.0);
  EXPECT_DOUBLE_EQ(o.values[1], 0.25);
  EXPECT_DOUBLE_EQ(o.values[2], 1.0);
  const auto inv = opacity_map(f, 2, true);
  EXPECT_DOUBLE_EQ(inv.values[0], 1.0);
  EXPECT_DOUBLE_EQ(inv.values[1], 0.75);
  EXPECT_DOUBLE_EQ(inv.values[2], 0.0);
  EXPECT_THROW(opacity_map(f, 0), ArgumentError);
}

TEST(Opacity, ConstantFieldBecomesTransparent) {
  ScalarField f;
  f.values = {3, 3, 3};
  log::ScopedSilence quiet;
  for (double v : opacity_map(f, 1).values) EXPECT_EQ(v, 0.0);
  EXPECT_TRUE(opacity_map(ScalarField{}, 1).values.empty());
}
