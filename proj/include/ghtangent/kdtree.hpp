// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <limits>
#include <vector>

#include "ghtangent/common.hpp"

namespace ght {

// Static exact kd-tree over row points. Queries are exact; the tree only
// prunes by bounding boxes.
class KdTree {
 public:
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  KdTree() = default;
  explicit KdTree(RowMatrix points, std::size_t leaf_size = 16);

  std::size_t size() const { return static_cast<std::size_t>(pts_.rows()); }
  int dim() const { return static_cast<int>(pts_.cols()); }
  const RowMatrix& points() const { return pts_; }

  // Rows with |p - q| < r (strict), appended to out in increasing row order.
  void radius(const double* q, double r, std::vector<std::size_t>& out) const;
  // Same with |p - q| <= r.
  void radius_closed(const double* q, double r, std::vector<std::size_t>& out) const;
  bool any_within(const double* q, double r) const;
  // Nearest row other than `exclude`; distance written to *dist. npos if none.
  std::size_t nearest(const double* q, double* dist = nullptr, std::size_t exclude = npos) const;

 private:
  struct Node {
    std::size_t lo, hi;
    int left = -1, right = -1;
  };
  int build(std::size_t lo, std::size_t hi);
  double box_dist2(int node, const double* q) const;
  double point_dist2(std::size_t row, const double* q) const;
  template <class Visit>
  void range_visit(int node, const double* q, double r2, bool strict, Visit& visit) const;
  void nearest_visit(int node, const double* q, std::size_t exclude, std::size_t& best,
                     double& best2) const;

  RowMatrix pts_;
  std::size_t leaf_ = 16;
  std::vector<std::size_t> perm_;
  std::vector<Node> nodes_;
  std::vector<double> box_lo_, box_hi_;
};

}  // namespace ght
