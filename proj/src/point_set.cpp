// SPDX-License-Identifier: Apache-2.0
#include "ghtangent/point_set.hpp"

#include <algorithm>
#include <iterator>
#include <numeric>

namespace ght {

PointSet PointSet::from_indices(std::vector<Index> indices) {
  std::sort(indices.begin(), indices.end());
  if (std::adjacent_find(indices.begin(), indices.end()) != indices.end())
    throw std::invalid_argument("PointSet: duplicate index");
  return PointSet(std::move(indices));
}

PointSet PointSet::from_sorted(std::vector<Index> indices) {
  for (std::size_t i = 1; i < indices.size(); ++i)
    if (indices[i - 1] >= indices[i])
      throw std::invalid_argument("PointSet: indices not strictly increasing");
  return PointSet(std::move(indices));
}

PointSet PointSet::range(Index n) {
  std::vector<Index> idx(n);
  std::iota(idx.begin(), idx.end(), Index{0});
  return PointSet(std::move(idx));
}

bool PointSet::contains(Index x) const {
  return std::binary_search(idx_.begin(), idx_.end(), x);
}

std::optional<std::size_t> PointSet::position(Index x) const {
  auto it = std::lower_bound(idx_.begin(), idx_.end(), x);
  if (it == idx_.end() || *it != x) return std::nullopt;
  return static_cast<std::size_t>(it - idx_.begin());
}

bool PointSet::is_subset_of(const PointSet& other) const {
  return std::includes(other.idx_.begin(), other.idx_.end(), idx_.begin(), idx_.end());
}

PointSet set_union(const PointSet& a, const PointSet& b) {
  std::vector<Index> out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return PointSet::from_sorted(std::move(out));
}

PointSet set_intersection(const PointSet& a, const PointSet& b) {
  std::vector<Index> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return PointSet::from_sorted(std::move(out));
}

PointSet set_difference(const PointSet& a, const PointSet& b) {
  std::vector<Index> out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return PointSet::from_sorted(std::move(out));
}

}  // namespace ght
