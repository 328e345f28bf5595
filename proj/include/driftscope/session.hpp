#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "driftscope/dataset.hpp"
#include "driftscope/diffusion.hpp"
#include "driftscope/errors.hpp"
#include "driftscope/scalar_field.hpp"
#include "driftscope/separation.hpp"
#include "driftscope/similarity.hpp"

namespace driftscope {

/// Insert-once cache. Values are computed outside the lock; when two callers
/// race on the same key the first insertion wins and later results are
/// discarded, so every caller sees the same object.
template <class Key, class Value>
class OnceCache {
 public:
  template <class Compute>
  std::shared_ptr<const Value> get(const Key& key, Compute&& compute) {
    {
      std::lock_guard lock(mu_);
      if (auto it = map_.find(key); it != map_.end()) return it->second;
    }
    auto fresh = std::make_shared<const Value>(compute());
    std::lock_guard lock(mu_);
    return map_.emplace(key, std::move(fresh)).first->second;
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return map_.size();
  }

 private:
  mutable std::mutex mu_;
  std::map<Key, std::shared_ptr<const Value>> map_;
};

/// A loaded dataset and its embedding, shared read-only by all queries.
class Session {
 public:
  Session(TrajectoryDataset ds, DiffusionEmbedding E, std::uint64_t seed = 1)
      : ds_(std::move(ds)), E_(std::move(E)), seed_(seed) {
    if (E_.size() != ds_.size())
      throw ArgumentError("embedding has " + std::to_string(E_.size()) + " particles, dataset has " +
                          std::to_string(ds_.size()));
  }

  const TrajectoryDataset& dataset() const { return ds_; }
  const DiffusionEmbedding& embedding() const { return E_; }
  std::uint64_t seed() const { return seed_; }

  /// Particle separation when `scale` is empty, diffusion separation otherwise.
  std::shared_ptr<const ScalarField> separation(std::optional<double> scale, Direction dir, std::size_t k) {
    if (k == 0) k = default_separation_neighbors(ds_.dim());
    const SeparationKey key{scale.has_value(), scale.value_or(0.0), static_cast<int>(dir), k};
    return separation_.get(key, [&] {
      return scale ? diffusion_separation(ds_, E_, *scale, dir, k) : particle_separation(ds_, dir, k);
    });
  }

  std::shared_ptr<const ScalarField> density(std::size_t step, std::size_t k) {
    return density_.get({step, k}, [&] { return knn_log_density(ds_, step, k); });
  }

  std::shared_ptr<const Clustering> clusters(std::size_t k, double scale) {
    return clusters_.get({k, scale}, [&] { return cluster_embedding(E_, scale, k, seed_); });
  }

  MultiSourceField field(const std::vector<std::size_t>& sources, double scale) const {
    return multi_source_field(E_, sources, scale);
  }

  NeighborhoodResult neighborhood(std::size_t source, double scale, double radius, std::size_t max_count) const {
    return similarity_neighborhood(E_, source, scale, radius, max_count);
  }

  /// Scales at which the slowest nontrivial mode has decayed to 90%, 50%,
  /// 10% and 1% of its weight.
  std::vector<double> scales_hint() const {
    std::vector<double> out;
    if (E_.modes() < 2) return out;
    const double l1 = E_.eigenvalues[1];
    if (!(l1 > 0) || !(l1 < 1)) return out;
    for (double q : {0.9, 0.5, 0.1, 0.01}) out.push_back(std::max(1.0, std::round(std::log(q) / std::log(l1))));
    return out;
  }

  nlohmann::json meta() const {
    nlohmann::json j;
    j["n"] = ds_.size();
    j["T"] = ds_.steps();
    j["d"] = ds_.dim();
    j["times"] = std::vector<double>(ds_.times().begin(), ds_.times().end());
    j["scales_hint"] = scales_hint();
    const auto b = ds_.bounds();
    j["bounds"] = {{"min", b.first}, {"max", b.second}};
    j["modes"] = E_.modes();
    return j;
  }

  std::size_t cached_entries() const { return separation_.size() + density_.size() + clusters_.size(); }

 private:
  using SeparationKey = std::tuple<bool, double, int, std::size_t>;

  TrajectoryDataset ds_;
  DiffusionEmbedding E_;
  std::uint64_t seed_;
  OnceCache<SeparationKey, ScalarField> separation_;
  OnceCache<std::pair<std::size_t, std::size_t>, ScalarField> density_;
  OnceCache<std::pair<std::size_t, double>, Clustering> clusters_;
};

}  // namespace driftscope
