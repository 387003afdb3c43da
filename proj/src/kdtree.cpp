// SPDX-License-Identifier: Apache-2.0
#include "ghtangent/kdtree.hpp"

#include <algorithm>
#include <numeric>

namespace ght {

KdTree::KdTree(RowMatrix points, std::size_t leaf_size)
    : pts_(std::move(points)), leaf_(std::max<std::size_t>(1, leaf_size)) {
  perm_.resize(size());
  std::iota(perm_.begin(), perm_.end(), std::size_t{0});
  if (size() > 0) build(0, size());
}

int KdTree::build(std::size_t lo, std::size_t hi) {
  const int d = dim();
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back({lo, hi});
  box_lo_.resize(box_lo_.size() + d, std::numeric_limits<double>::infinity());
  box_hi_.resize(box_hi_.size() + d, -std::numeric_limits<double>::infinity());
  double* blo = &box_lo_[static_cast<std::size_t>(id) * d];
  double* bhi = &box_hi_[static_cast<std::size_t>(id) * d];
  for (std::size_t i = lo; i < hi; ++i)
    for (int c = 0; c < d; ++c) {
      const double v = pts_(static_cast<Eigen::Index>(perm_[i]), c);
      blo[c] = std::min(blo[c], v);
      bhi[c] = std::max(bhi[c], v);
    }
  if (hi - lo <= leaf_) return id;

  int axis = 0;
  double widest = -1.0;
  for (int c = 0; c < d; ++c)
    if (bhi[c] - blo[c] > widest) {
      widest = bhi[c] - blo[c];
      axis = c;
    }
  if (widest <= 0.0) return id;  // all coincident
  const std::size_t mid = lo + (hi - lo) / 2;
  std::nth_element(perm_.begin() + static_cast<std::ptrdiff_t>(lo),
                   perm_.begin() + static_cast<std::ptrdiff_t>(mid),
                   perm_.begin() + static_cast<std::ptrdiff_t>(hi),
                   [&](std::size_t a, std::size_t b) {
                     return pts_(static_cast<Eigen::Index>(a), axis) <
                            pts_(static_cast<Eigen::Index>(b), axis);
                   });
  const int l = build(lo, mid);
  const int r = build(mid, hi);
  nodes_[static_cast<std::size_t>(id)].left = l;
  nodes_[static_cast<std::size_t>(id)].right = r;
  return id;
}

double KdTree::box_dist2(int node, const double* q) const {
  const int d = dim();
  const double* blo = &box_lo_[static_cast<std::size_t>(node) * d];
  const double* bhi = &box_hi_[static_cast<std::size_t>(node) * d];
  double s = 0.0;
  for (int c = 0; c < d; ++c) {
    double e = 0.0;
    if (q[c] < blo[c]) e = blo[c] - q[c];
    else if (q[c] > bhi[c]) e = q[c] - bhi[c];
    s += e * e;
  }
  return s;
}

double KdTree::point_dist2(std::size_t row, const double* q) const {
  double s = 0.0;
  const double* p = pts_.data() + row * static_cast<std::size_t>(dim());
  for (int c = 0; c < dim(); ++c) {
    const double e = p[c] - q[c];
    s += e * e;
  }
  return s;
}

template <class Visit>
void KdTree::range_visit(int node, const double* q, double r2, bool strict, Visit& visit) const {
  const double bd = box_dist2(node, q);
  if (strict ? !(bd < r2) : !(bd <= r2)) return;
  const Node& n = nodes_[static_cast<std::size_t>(node)];
  if (n.left < 0) {
    for (std::size_t i = n.lo; i < n.hi; ++i) {
      const double d2 = point_dist2(perm_[i], q);
      if (strict ? d2 < r2 : d2 <= r2)
        if (!visit(perm_[i])) return;
    }
    return;
  }
  range_visit(n.left, q, r2, strict, visit);
  range_visit(n.right, q, r2, strict, visit);
}

// Squared comparisons are exact enough here: for the strict ball we compare
// d2 < r*r, which can differ from sqrt(d2) < r only at rounding ties.
void KdTree::radius(const double* q, double r, std::vector<std::size_t>& out) const {
  if (size() == 0 || r <= 0.0) return;
  const std::size_t start = out.size();
  auto visit = [&](std::size_t i) {
    out.push_back(i);
    return true;
  };
  range_visit(0, q, r * r, true, visit);
  std::sort(out.begin() + static_cast<std::ptrdiff_t>(start), out.end());
}

void KdTree::radius_closed(const double* q, double r, std::vector<std::size_t>& out) const {
  if (size() == 0 || r < 0.0) return;
  const std::size_t start = out.size();
  auto visit = [&](std::size_t i) {
    out.push_back(i);
    return true;
  };
  range_visit(0, q, r * r, false, visit);
  std::sort(out.begin() + static_cast<std::ptrdiff_t>(start), out.end());
}

bool KdTree::any_within(const double* q, double r) const {
  if (size() == 0) return false;
  bool found = false;
  auto visit = [&](std::size_t) {
    found = true;
    return false;
  };
  range_visit(0, q, r * r, false, visit);
  return found;
}

void KdTree::nearest_visit(int node, const double* q, std::size_t exclude, std::size_t& best,
                           double& best2) const {
  if (best != npos && box_dist2(node, q) > best2) return;
  const Node& n = nodes_[static_cast<std::size_t>(node)];
  if (n.left < 0) {
    for (std::size_t i = n.lo; i < n.hi; ++i) {
      const std::size_t row = perm_[i];
      if (row == exclude) continue;
      const double d2 = point_dist2(row, q);
      if (best == npos || d2 < best2 || (d2 == best2 && row < best)) {
        best = row;
        best2 = d2;
      }
    }
    return;
  }
  const double dl = box_dist2(n.left, q), dr = box_dist2(n.right, q);
  if (dl <= dr) {
    nearest_visit(n.left, q, exclude, best, best2);
    nearest_visit(n.right, q, exclude, best, best2);
  } else {
    nearest_visit(n.right, q, exclude, best, best2);
    nearest_visit(n.left, q, exclude, best, best2);
  }
}

std::size_t KdTree::nearest(const double* q, double* dist, std::size_t exclude) const {
  std::size_t best = npos;
  double best2 = std::numeric_limits<double>::infinity();
  if (size() > 0) nearest_visit(0, q, exclude, best, best2);
  if (dist) *dist = best == npos ? std::numeric_limits<double>::infinity() : std::sqrt(best2);
  return best;
}

}  // namespace ght
