#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "driftscope/dataset.hpp"
#include "driftscope/errors.hpp"

namespace driftscope {

enum class LandmarkStrategy { random, fps, tfps };

inline const char* to_string(LandmarkStrategy s) {
  switch (s) {
    case LandmarkStrategy::random: return "random";
    case LandmarkStrategy::fps: return "fps";
    case LandmarkStrategy::tfps: return "tfps";
  }
  return "?";
}

inline LandmarkStrategy parse_landmark_strategy(const std::string& s) {
  if (s == "random") return LandmarkStrategy::random;
  if (s == "fps") return LandmarkStrategy::fps;
  if (s == "tfps" || s == "t-fps") return LandmarkStrategy::tfps;
  throw ConfigError("unknown landmark strategy '" + s + "' (expected random|fps|tfps)");
}

struct LandmarkSet {
  std::vector<std::size_t> indices;
  LandmarkStrategy strategy = LandmarkStrategy::tfps;
  std::uint64_t rng_seed = 0;
  std::size_t stride = 5;

  std::size_t size() const { return indices.size(); }
};

/// Every particle as a landmark, in index order.
inline LandmarkSet all_particles(std::size_t n) {
  LandmarkSet lm;
  lm.indices.resize(n);
  std::iota(lm.indices.begin(), lm.indices.end(), std::size_t{0});
  lm.strategy = LandmarkStrategy::fps;
  lm.stride = 1;
  return lm;
}

/// Greedy max-min selection under the dynamic distance restricted to `steps`.
///
/// Keeps a running minimum distance to the chosen set, so every round costs
/// one distance evaluation per particle. Ties go to the lowest index.
inline std::vector<std::size_t> farthest_point_sampling(const TrajectoryDataset& ds, std::size_t count,
                                                        std::size_t first, std::span<const std::size_t> steps) {
  const std::size_t n = ds.size(), d = ds.dim(), S = steps.size();
  const auto w = dynamic_distance_weights(ds.times(), steps);

  // Pack the sampled positions so each round streams through contiguous memory.
  std::vector<double> packed(n * S * d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t q = 0; q < S; ++q) {
      auto p = ds.position(i, steps[q]);
      std::copy(p.begin(), p.end(), packed.begin() + static_cast<std::ptrdiff_t>((i * S + q) * d));
    }

  std::vector<double> mind(n, std::numeric_limits<double>::infinity());
  std::vector<char> chosen(n, 0);
  std::vector<std::size_t> out;
  out.reserve(count);
  std::size_t next = first;
  while (true) {
    out.push_back(next);
    chosen[next] = 1;
    mind[next] = 0;
    if (out.size() == count) break;

    const double* src = packed.data() + next * S * d;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t sj = 0; sj < static_cast<std::ptrdiff_t>(n); ++sj) {
      const auto j = static_cast<std::size_t>(sj);
      if (chosen[j]) continue;
      const double* dst = packed.data() + j * S * d;
      double acc = 0;
      for (std::size_t q = 0; q < S; ++q) {
        double s2 = 0;
        for (std::size_t c = 0; c < d; ++c) {
          const double t = src[q * d + c] - dst[q * d + c];
          s2 += t * t;
        }
        acc += w[q] * std::sqrt(s2);
      }
      if (acc < mind[j]) mind[j] = acc;
    }

    std::size_t best = n;
    double best_d = -1;
    for (std::size_t j = 0; j < n; ++j)
      if (!chosen[j] && mind[j] > best_d) {
        best_d = mind[j];
        best = j;
      }
    next = best;
  }
  return out;
}

/// Picks `count` landmark particles. The fps strategy measures dynamic
/// distance over every time step; tfps only over every `stride`-th step.
/// The first fps/tfps landmark is drawn uniformly from `rng_seed`.
inline LandmarkSet select_landmarks(const TrajectoryDataset& ds, std::size_t count, LandmarkStrategy strategy,
                                    std::uint64_t rng_seed, std::size_t stride = 5) {
  const std::size_t n = ds.size();
  if (count == 0) throw ArgumentError("at least one landmark is required");
  if (count > n)
    throw ArgumentError("requested " + std::to_string(count) + " landmarks from " + std::to_string(n) + " particles");
  if (stride == 0) throw ArgumentError("stride must be at least 1");

  LandmarkSet lm;
  lm.strategy = strategy;
  lm.rng_seed = rng_seed;
  lm.stride = strategy == LandmarkStrategy::fps ? 1 : stride;
  std::mt19937_64 rng(rng_seed);

  if (strategy == LandmarkStrategy::random) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    // Partial Fisher-Yates: the first `count` slots are a uniform sample.
    for (std::size_t i = 0; i < count; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n - 1);
      std::swap(perm[i], perm[pick(rng)]);
    }
    perm.resize(count);
    lm.indices = std::move(perm);
    return lm;
  }

  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  const std::size_t first = pick(rng);
  const auto steps = subsampled_steps(ds.steps(), lm.stride);
  lm.indices = farthest_point_sampling(ds, count, first, steps);
  return lm;
}

}  // namespace driftscope
