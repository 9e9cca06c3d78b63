#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <vector>

#include "poleloc/geometry.hpp"

namespace poleloc {

/// Static 2D k-d tree for nearest-neighbor lookups over pole centers.
/// Ties in distance resolve to the smaller original index, matching the
/// brute-force reference used by the tests.
class KdTree2D {
 public:
  KdTree2D() = default;

  explicit KdTree2D(std::vector<Point2> points) : points_(std::move(points)) {
    std::vector<std::size_t> order(points_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    nodes_.reserve(points_.size());
    if (!order.empty()) root_ = build(order, 0, order.size(), 0);
  }

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const Point2& point(std::size_t index) const { return points_[index]; }

  struct Result {
    std::size_t index = 0;
    double dist_sq = 0.0;
  };

  /// Nearest stored point within max_dist (inclusive) of q, if any.
  std::optional<Result> nearest(const Point2& q, double max_dist) const {
    if (root_ < 0) return std::nullopt;
    Best best;
    best.limit_sq = max_dist * max_dist;
    search(root_, q, best);
    if (!best.found) return std::nullopt;
    return Result{best.index, best.dist_sq};
  }

 private:
  struct Node {
    Point2 p;
    std::size_t index;
    int axis;
    int left = -1;
    int right = -1;
  };

  struct Best {
    bool found = false;
    std::size_t index = 0;
    double dist_sq = 0.0;
    double limit_sq = 0.0;
  };

  int build(std::vector<std::size_t>& order, std::size_t lo, std::size_t hi,
            int axis) {
    if (lo >= hi) return -1;
    const std::size_t mid = lo + (hi - lo) / 2;
    std::nth_element(order.begin() + lo, order.begin() + mid,
                     order.begin() + hi, [&](std::size_t a, std::size_t b) {
                       const double ca = axis == 0 ? points_[a].x : points_[a].y;
                       const double cb = axis == 0 ? points_[b].x : points_[b].y;
                       if (ca != cb) return ca < cb;
                       return a < b;
                     });
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back({points_[order[mid]], order[mid], axis, -1, -1});
    const int left = build(order, lo, mid, 1 - axis);
    const int right = build(order, mid + 1, hi, 1 - axis);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  void consider(const Node& n, const Point2& q, Best& best) const {
    const double d2 = squared_distance(n.p, q);
    if (d2 > best.limit_sq) return;
    if (!best.found || d2 < best.dist_sq ||
        (d2 == best.dist_sq && n.index < best.index)) {
      best.found = true;
      best.index = n.index;
      best.dist_sq = d2;
    }
  }

  void search(int id, const Point2& q, Best& best) const {
    const Node& n = nodes_[id];
    consider(n, q, best);
    const double qc = n.axis == 0 ? q.x : q.y;
    const double nc = n.axis == 0 ? n.p.x : n.p.y;
    const double diff = qc - nc;
    const int near = diff < 0.0 ? n.left : n.right;
    const int far = diff < 0.0 ? n.right : n.left;
    if (near >= 0) search(near, q, best);
    const double bound = best.found ? best.dist_sq : best.limit_sq;
    // <= keeps equal-distance candidates reachable for the index tie-break
    if (far >= 0 && diff * diff <= bound) search(far, q, best);
  }

  std::vector<Point2> points_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace poleloc
