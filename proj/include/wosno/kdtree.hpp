#pragma once

#include "wosno/types.hpp"

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

namespace wosno {

// Static 2D kd-tree over a point set, nearest-neighbour queries only.
// The tree is stored implicitly: the median of every index range is the node.
class KdTree2 {
 public:
  KdTree2() = default;

  explicit KdTree2(std::vector<Vec2> points) : points_(std::move(points)) {
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    build(0, order_.size(), 0);
  }

  struct Nearest {
    std::size_t index = 0;
    double dist2 = std::numeric_limits<double>::infinity();
  };

  Nearest nearest(const Vec2& q) const {
    Nearest best;
    if (!order_.empty()) search(q, 0, order_.size(), 0, best);
    return best;
  }

  const std::vector<Vec2>& points() const { return points_; }
  bool empty() const { return points_.empty(); }

 private:
  void build(std::size_t lo, std::size_t hi, int axis) {
    if (hi - lo <= 1) return;
    const std::size_t mid = lo + (hi - lo) / 2;
    std::nth_element(order_.begin() + lo, order_.begin() + mid, order_.begin() + hi,
                     [&](std::size_t a, std::size_t b) {
                       return points_[a][axis] < points_[b][axis];
                     });
    build(lo, mid, 1 - axis);
    build(mid + 1, hi, 1 - axis);
  }

  void search(const Vec2& q, std::size_t lo, std::size_t hi, int axis, Nearest& best) const {
    if (lo >= hi) return;
    const std::size_t mid = lo + (hi - lo) / 2;
    const std::size_t idx = order_[mid];
    const double d2 = (points_[idx] - q).squaredNorm();
    if (d2 < best.dist2 || (d2 == best.dist2 && idx < best.index)) {
      best.dist2 = d2;
      best.index = idx;
    }
    const double delta = q[axis] - points_[idx][axis];
    const bool left_first = delta < 0.0;
    if (left_first) {
      search(q, lo, mid, 1 - axis, best);
      if (delta * delta <= best.dist2) search(q, mid + 1, hi, 1 - axis, best);
    } else {
      search(q, mid + 1, hi, 1 - axis, best);
      if (delta * delta <= best.dist2) search(q, lo, mid, 1 - axis, best);
    }
  }

  std::vector<Vec2> points_;
  std::vector<std::size_t> order_;
};

}  // namespace wosno
