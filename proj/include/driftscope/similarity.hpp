#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "driftscope/diffusion.hpp"
#include "driftscope/errors.hpp"

namespace driftscope {

struct NeighborhoodResult {
  std::size_t source = 0;
  double scale = 0;
  double radius = 0;
  std::size_t max_count = 0;
  /// Candidates found before any subsampling.
  std::size_t candidates = 0;
  std::vector<std::size_t> members;  // source first
  std::vector<double> distances;     // d_s(source, member)
};

/// Particles within diffusion distance `radius` of `source`. When more than
/// `max_count` qualify, farthest point sampling under d_s (seeded at the
/// source) thins them and members come out in selection order; otherwise
/// members are sorted by distance.
inline NeighborhoodResult similarity_neighborhood(const DiffusionEmbedding& E, std::size_t source, double s,
                                                  double radius, std::size_t max_count) {
  check_particle(E, source);
  if (!(radius > 0)) throw ArgumentError("radius must be positive");
  if (max_count == 0) throw ArgumentError("max_count must be at least 1");
  const auto dist = distances_from(E, source, s);

  NeighborhoodResult r;
  r.source = source;
  r.scale = s;
  r.radius = radius;
  r.max_count = max_count;

  std::vector<std::size_t> cand;
  for (std::size_t j = 0; j < dist.size(); ++j)
    if (j != source && dist[j] <= radius) cand.push_back(j);
  r.candidates = cand.size() + 1;

  if (cand.size() + 1 <= max_count) {
    std::stable_sort(cand.begin(), cand.end(), [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
    r.members.push_back(source);
    r.members.insert(r.members.end(), cand.begin(), cand.end());
  } else {
    const auto w = scale_weights(E, s);
    std::vector<double> mind(cand.size());
    for (std::size_t q = 0; q < cand.size(); ++q) mind[q] = dist[cand[q]];
    std::vector<char> taken(cand.size(), 0);
    r.members.push_back(source);
    while (r.members.size() < max_count) {
      std::size_t best = cand.size();
      double best_d = -1;
      for (std::size_t q = 0; q < cand.size(); ++q)
        if (!taken[q] && mind[q] > best_d) {
          best_d = mind[q];
          best = q;
        }
      taken[best] = 1;
      const std::size_t pick = cand[best];
      r.members.push_back(pick);
#pragma omp parallel for schedule(static)
      for (std::ptrdiff_t sq = 0; sq < static_cast<std::ptrdiff_t>(cand.size()); ++sq) {
        const auto q = static_cast<std::size_t>(sq);
        if (taken[q]) continue;
        const double dq = std::sqrt(detail::weighted_distance2(E, w, pick, cand[q]));
        if (dq < mind[q]) mind[q] = dq;
      }
    }
  }
  r.distances.reserve(r.members.size());
  for (auto j : r.members) r.distances.push_back(j == source ? 0.0 : dist[j]);
  return r;
}

struct MultiSourceField {
  std::vector<std::size_t> sources;
  double scale = 0;
  std::vector<std::size_t> nearest;  // particle index of the closest source
  std::vector<double> distances;
};

/// Closest source per particle. Ties go to the source listed first.
inline MultiSourceField multi_source_field(const DiffusionEmbedding& E, std::span<const std::size_t> sources, double s) {
  if (sources.empty()) throw ArgumentError("at least one source is required");
  for (std::size_t a = 0; a < sources.size(); ++a) {
    check_particle(E, sources[a]);
    for (std::size_t b = 0; b < a; ++b)
      if (sources[a] == sources[b]) throw ArgumentError("duplicate source " + std::to_string(sources[a]));
  }
  const auto w = scale_weights(E, s);
  MultiSourceField f;
  f.sources.assign(sources.begin(), sources.end());
  f.scale = s;
  f.nearest.resize(E.size());
  f.distances.resize(E.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t sj = 0; sj < static_cast<std::ptrdiff_t>(E.size()); ++sj) {
    const auto j = static_cast<std::size_t>(sj);
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = sources[0];
    for (auto src : sources) {
      const double d2 = detail::weighted_distance2(E, w, src, j);
      if (d2 < best) {
        best = d2;
        arg = src;
      }
    }
    f.nearest[j] = arg;
    f.distances[j] = std::sqrt(best);
  }
  return f;
}

struct ClusterOptions {
  std::size_t restarts = 8;
  std::size_t max_iterations = 300;
};

struct Clustering {
  std::vector<std::uint32_t> labels;
  double inertia = 0;
};

/// k-means with k-means++ seeding on Phi_s. The best of several seeded
/// restarts is kept; labels are renumbered by first appearance.
inline Clustering cluster_embedding(const DiffusionEmbedding& E, double s, std::size_t k, std::uint64_t rng_seed,
                                    const ClusterOptions& opt = {}) {
  const std::size_t n = E.size();
  if (k == 0) throw ArgumentError("cluster count must be at least 1");
  if (k > n) throw ArgumentError("cluster count " + std::to_string(k) + " exceeds particle count " + std::to_string(n));
  const auto w = scale_weights(E, s);
  const std::size_t m = w.size() > 0 ? w.size() - 1 : 0;
  std::vector<double> x(n * m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t l = 1; l <= m; ++l)
      x[i * m + l - 1] = w[l] * E.eigenvectors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l));

  auto d2 = [&](const double* a, const double* b) {
    double acc = 0;
    for (std::size_t c = 0; c < m; ++c) acc += (a[c] - b[c]) * (a[c] - b[c]);
    return acc;
  };

  std::mt19937_64 rng(rng_seed);
  Clustering best;
  best.inertia = std::numeric_limits<double>::infinity();
  const std::size_t restarts = std::max<std::size_t>(opt.restarts, 1);
  for (std::size_t rep = 0; rep < restarts; ++rep) {
    std::vector<double> centers(k * m);
    std::vector<double> closest(n, std::numeric_limits<double>::infinity());
    std::size_t pick = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    for (std::size_t c = 0; c < k; ++c) {
      std::copy_n(x.data() + pick * m, m, centers.data() + c * m);
      double total = 0;
      for (std::size_t i = 0; i < n; ++i) {
        closest[i] = std::min(closest[i], d2(x.data() + i * m, centers.data() + c * m));
        total += closest[i];
      }
      if (c + 1 == k) break;
      if (total > 0) {
        double u = std::uniform_real_distribution<double>(0.0, total)(rng);
        pick = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
          u -= closest[i];
          if (u < 0) {
            pick = i;
            break;
          }
        }
      } else {
        pick = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
      }
    }

    std::vector<std::uint32_t> labels(n, 0);
    double inertia = 0;
    for (std::size_t it = 0; it < opt.max_iterations; ++it) {
      bool changed = false;
      inertia = 0;
      for (std::size_t i = 0; i < n; ++i) {
        double bd = std::numeric_limits<double>::infinity();
        std::uint32_t bl = 0;
        for (std::size_t c = 0; c < k; ++c) {
          const double dc = d2(x.data() + i * m, centers.data() + c * m);
          if (dc < bd) {
            bd = dc;
            bl = static_cast<std::uint32_t>(c);
          }
        }
        if (it == 0 || labels[i] != bl) changed = true;
        labels[i] = bl;
        inertia += bd;
      }
      if (!changed && it > 0) break;
      std::vector<double> sum(k * m, 0.0);
      std::vector<std::size_t> count(k, 0);
      for (std::size_t i = 0; i < n; ++i) {
        ++count[labels[i]];
        for (std::size_t c = 0; c < m; ++c) sum[labels[i] * m + c] += x[i * m + c];
      }
      for (std::size_t c = 0; c < k; ++c)
        if (count[c] > 0)
          for (std::size_t q = 0; q < m; ++q) centers[c * m + q] = sum[c * m + q] / static_cast<double>(count[c]);
    }
    if (inertia < best.inertia) {
      best.inertia = inertia;
      best.labels = std::move(labels);
    }
  }

  std::vector<std::uint32_t> remap(k, std::numeric_limits<std::uint32_t>::max());
  std::uint32_t next = 0;
  for (auto& l : best.labels) {
    if (remap[l] == std::numeric_limits<std::uint32_t>::max()) remap[l] = next++;
    l = remap[l];
  }
  return best;
}

}  // namespace driftscope
