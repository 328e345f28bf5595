#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <queue>
#include <span>
#include <utility>
#include <vector>

#include "driftscope/errors.hpp"

namespace driftscope {

struct Neighbor {
  double dist2;
  std::size_t index;
  friend bool operator<(const Neighbor& a, const Neighbor& b) {
    return a.dist2 < b.dist2 || (a.dist2 == b.dist2 && a.index < b.index);
  }
};

/// Static k-d tree over points packed n x d. Queries return neighbors ordered
/// by (distance, index), so equidistant points resolve toward lower indices.
class KdTree {
 public:
  static constexpr std::size_t leaf_size = 8;

  KdTree(std::span<const double> points, std::size_t dim) : pts_(points.begin(), points.end()), d_(dim) {
    if (d_ == 0 || pts_.size() % d_ != 0) throw ArgumentError("point array does not match dimension");
    n_ = pts_.size() / d_;
    order_.resize(n_);
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    axis_.assign(n_, 0);
    build(0, n_);
  }

  std::size_t size() const { return n_; }
  std::size_t dim() const { return d_; }

  /// The k nearest points to q, skipping point `exclude` (if < size()).
  std::vector<Neighbor> knn(std::span<const double> q, std::size_t k,
                            std::size_t exclude = std::numeric_limits<std::size_t>::max()) const {
    std::priority_queue<Neighbor> heap;
    if (k > 0) knn_rec(0, n_, q, k, exclude, heap);
    std::vector<Neighbor> out(heap.size());
    for (std::size_t i = out.size(); i-- > 0;) {
      out[i] = heap.top();
      heap.pop();
    }
    return out;
  }

  /// All points with squared distance <= r2 from q, in ascending index order.
  std::vector<std::size_t> within(std::span<const double> q, double r2) const {
    std::vector<std::size_t> out;
    within_rec(0, n_, q, r2, out);
    std::sort(out.begin(), out.end());
    return out;
  }

  double dist2(std::span<const double> q, std::size_t i) const {
    double s = 0;
    for (std::size_t c = 0; c < d_; ++c) {
      const double t = q[c] - pts_[i * d_ + c];
      s += t * t;
    }
    return s;
  }

 private:
  double coord(std::size_t i, std::size_t c) const { return pts_[i * d_ + c]; }

  void build(std::size_t lo, std::size_t hi) {
    if (hi - lo <= leaf_size) return;
    std::size_t best_axis = 0;
    double best_spread = -1;
    for (std::size_t c = 0; c < d_; ++c) {
      double mn = std::numeric_limits<double>::infinity(), mx = -mn;
      for (std::size_t p = lo; p < hi; ++p) {
        mn = std::min(mn, coord(order_[p], c));
        mx = std::max(mx, coord(order_[p], c));
      }
      if (mx - mn > best_spread) {
        best_spread = mx - mn;
        best_axis = c;
      }
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(lo), order_.begin() + static_cast<std::ptrdiff_t>(mid),
                     order_.begin() + static_cast<std::ptrdiff_t>(hi), [&](std::size_t a, std::size_t b) {
                       return coord(a, best_axis) < coord(b, best_axis);
                     });
    axis_[mid] = best_axis;
    build(lo, mid);
    build(mid + 1, hi);
  }

  void consider(std::size_t idx, std::span<const double> q, std::size_t k, std::size_t exclude,
                std::priority_queue<Neighbor>& heap) const {
    if (idx == exclude) return;
    const Neighbor cand{dist2(q, idx), idx};
    if (heap.size() < k) {
      heap.push(cand);
    } else if (cand < heap.top()) {
      heap.pop();
      heap.push(cand);
    }
  }

  void knn_rec(std::size_t lo, std::size_t hi, std::span<const double> q, std::size_t k, std::size_t exclude,
               std::priority_queue<Neighbor>& heap) const {
    if (hi - lo <= leaf_size) {
      for (std::size_t p = lo; p < hi; ++p) consider(order_[p], q, k, exclude, heap);
      return;
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    const std::size_t pivot = order_[mid];
    const std::size_t ax = axis_[mid];
    const double diff = q[ax] - coord(pivot, ax);
    consider(pivot, q, k, exclude, heap);
    const bool left_first = diff < 0;
    if (left_first)
      knn_rec(lo, mid, q, k, exclude, heap);
    else
      knn_rec(mid + 1, hi, q, k, exclude, heap);
    if (heap.size() < k || diff * diff <= heap.top().dist2) {
      if (left_first)
        knn_rec(mid + 1, hi, q, k, exclude, heap);
      else
        knn_rec(lo, mid, q, k, exclude, heap);
    }
  }

  void within_rec(std::size_t lo, std::size_t hi, std::span<const double> q, double r2,
                  std::vector<std::size_t>& out) const {
    if (hi - lo <= leaf_size) {
      for (std::size_t p = lo; p < hi; ++p)
        if (dist2(q, order_[p]) <= r2) out.push_back(order_[p]);
      return;
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    const std::size_t pivot = order_[mid];
    const std::size_t ax = axis_[mid];
    const double diff = q[ax] - coord(pivot, ax);
    if (dist2(q, pivot) <= r2) out.push_back(pivot);
    if (diff <= 0 || diff * diff <= r2) within_rec(lo, mid, q, r2, out);
    if (diff >= 0 || diff * diff <= r2) within_rec(mid + 1, hi, q, r2, out);
  }

  std::vector<double> pts_;
  std::size_t d_;
  std::size_t n_ = 0;
  std::vector<std::size_t> order_;
  std::vector<std::size_t> axis_;
};

}  // namespace driftscope
