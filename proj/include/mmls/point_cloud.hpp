/**
 * @file point_cloud.hpp
 * @brief Immutable point storage with exact fixed-radius queries.
 *
 * Queries return exactly {i : ||r_i - c|| < rho} (strict inequality), in
 * ascending index order. A bounding-box k-d tree accelerates low dimensions;
 * high dimensions fall back to a linear scan, which is the honest path when
 * D is large enough that tree pruning cannot help.
 */
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <utility>
#include <vector>

#include "mmls/errors.hpp"

namespace mmls {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

class PointCloud {
 public:
  static constexpr Index kKdTreeMaxDim = 16;
  static constexpr Index kLeafSize = 16;

  /// Builds the cloud and its spatial index. The matrix is one point per row.
  static PointCloud build(MatrixXd points) {
    if (points.rows() < 1) {
      throw Error(ErrorCode::kEmptyInput, "point cloud needs at least one point");
    }
    if (!points.allFinite()) {
      throw Error(ErrorCode::kNonFiniteInput, "point cloud contains NaN or Inf");
    }
    return PointCloud(std::move(points));
  }

  Index size() const { return points_.rows(); }
  Index dim() const { return points_.cols(); }
  const MatrixXd& points() const { return points_; }
  VectorXd point(Index i) const { return points_.row(i).transpose(); }

  /// Exact strict-inequality ball membership, ascending indices.
  std::vector<Index> radius_query(const VectorXd& center, double radius) const {
    if (center.size() != dim()) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "query center dimension does not match cloud");
    }
    if (!(radius > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "query radius must be positive");
    }
    const double r2 = radius * radius;
    std::vector<Index> hits;
    if (nodes_.empty()) {
      for (Index i = 0; i < size(); ++i) {
        if ((points_.row(i).transpose() - center).squaredNorm() < r2) {
          hits.push_back(i);
        }
      }
      return hits;
    }
    collect(0, center, r2, hits);
    std::sort(hits.begin(), hits.end());
    return hits;
  }

 private:
  struct Node {
    Index begin = 0, end = 0;  // range into perm_
    int left = -1, right = -1;
    VectorXd bb_min, bb_max;
  };

  explicit PointCloud(MatrixXd points) : points_(std::move(points)) {
    if (dim() <= kKdTreeMaxDim) {
      perm_.resize(static_cast<std::size_t>(size()));
      std::iota(perm_.begin(), perm_.end(), Index{0});
      nodes_.reserve(static_cast<std::size_t>(2 * size() / kLeafSize + 2));
      build_node(0, size());
    }
  }

  int build_node(Index begin, Index end) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    Node& node = nodes_.back();
    node.begin = begin;
    node.end = end;
    node.bb_min = VectorXd::Constant(dim(), std::numeric_limits<double>::infinity());
    node.bb_max = VectorXd::Constant(dim(), -std::numeric_limits<double>::infinity());
    for (Index k = begin; k < end; ++k) {
      const auto row = points_.row(perm_[static_cast<std::size_t>(k)]);
      node.bb_min = node.bb_min.cwiseMin(row.transpose());
      node.bb_max = node.bb_max.cwiseMax(row.transpose());
    }
    if (end - begin <= kLeafSize) return id;

    Index axis;
    (nodes_[static_cast<std::size_t>(id)].bb_max -
     nodes_[static_cast<std::size_t>(id)].bb_min)
        .maxCoeff(&axis);
    const Index mid = begin + (end - begin) / 2;
    std::nth_element(perm_.begin() + begin, perm_.begin() + mid,
                     perm_.begin() + end, [&](Index a, Index b) {
                       return points_(a, axis) < points_(b, axis);
                     });
    // Note: nodes_ may reallocate during recursion; use indices, not refs.
    const int left = build_node(begin, mid);
    const int right = build_node(mid, end);
    nodes_[static_cast<std::size_t>(id)].left = left;
    nodes_[static_cast<std::size_t>(id)].right = right;
    return id;
  }

  void collect(int id, const VectorXd& center, double r2,
               std::vector<Index>& hits) const {
    const Node& node = nodes_[static_cast<std::size_t>(id)];
    double box_dist2 = 0.0;
    for (Index a = 0; a < dim(); ++a) {
      const double below = node.bb_min(a) - center(a);
      const double above = center(a) - node.bb_max(a);
      const double gap = std::max({below, above, 0.0});
      box_dist2 += gap * gap;
      if (box_dist2 >= r2) return;  // nothing strictly inside can be here
    }
    if (node.left < 0) {
      for (Index k = node.begin; k < node.end; ++k) {
        const Index i = perm_[static_cast<std::size_t>(k)];
        if ((points_.row(i).transpose() - center).squaredNorm() < r2) {
          hits.push_back(i);
        }
      }
      return;
    }
    collect(node.left, center, r2, hits);
    collect(node.right, center, r2, hits);
  }

  MatrixXd points_;
  std::vector<Index> perm_;
  std::vector<Node> nodes_;
};

}  // namespace mmls
