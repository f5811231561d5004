// Copyright Contributors to the Splatforge Project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "splatforge/core/math.hpp"

namespace splatforge {

/// Static 3-D k-d tree with exact nearest-neighbor queries. Ties resolve to the lowest index.
class KdTree {
  public:
    struct Hit {
        std::size_t index = 0;
        double squared_distance = std::numeric_limits<double>::infinity();
    };

    KdTree() = default;
    explicit KdTree(std::vector<Vec3> points) : points_(std::move(points)) {
        order_.resize(points_.size());
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        if (!points_.empty()) root_ = build(0, points_.size(), 0);
    }

    std::size_t size() const { return points_.size(); }
    const std::vector<Vec3>& points() const { return points_; }

    Hit nearest(const Vec3& q) const {
        Hit best;
        if (root_ >= 0) search(root_, q, best);
        return best;
    }

  private:
    static constexpr std::size_t kLeafSize = 8;
    struct Node {
        std::size_t begin, end;  // range in order_
        int axis = -1;           // −1 marks a leaf
        double split = 0.0;
        int left = -1, right = -1;
    };

    int build(std::size_t begin, std::size_t end, int depth) {
        const int id = static_cast<int>(nodes_.size());
        nodes_.push_back({begin, end});
        if (end - begin <= kLeafSize) return id;
        Vec3 lo = points_[order_[begin]], hi = lo;
        for (std::size_t i = begin; i < end; ++i) {
            lo = lo.cwiseMin(points_[order_[i]]);
            hi = hi.cwiseMax(points_[order_[i]]);
        }
        int axis;
        (hi - lo).maxCoeff(&axis);
        if (hi[axis] == lo[axis]) return id;  // all points coincide
        const std::size_t mid = begin + (end - begin) / 2;
        std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                         [&](std::size_t a, std::size_t b) { return points_[a][axis] < points_[b][axis]; });
        nodes_[id].axis = axis;
        nodes_[id].split = points_[order_[mid]][axis];
        const int l = build(begin, mid, depth + 1);
        const int r = build(mid, end, depth + 1);
        nodes_[id].left = l;
        nodes_[id].right = r;
        return id;
    }

    void search(int id, const Vec3& q, Hit& best) const {
        const Node& n = nodes_[id];
        if (n.axis < 0) {
            for (std::size_t i = n.begin; i < n.end; ++i) {
                const std::size_t idx = order_[i];
                const double d = (points_[idx] - q).squaredNorm();
                if (d < best.squared_distance || (d == best.squared_distance && idx < best.index)) best = {idx, d};
            }
            return;
        }
        const double diff = q[n.axis] - n.split;
        const int near = diff < 0 ? n.left : n.right;
        const int far = diff < 0 ? n.right : n.left;
        search(near, q, best);
        if (diff * diff <= best.squared_distance) search(far, q, best);
    }

    std::vector<Vec3> points_;
    std::vector<std::size_t> order_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

}  // namespace splatforge
