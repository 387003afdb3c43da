// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <vector>

#include "ghtangent/common.hpp"

namespace ght {

// Sorted, duplicate-free subset of point indices.
class PointSet {
 public:
  PointSet() = default;

  // Sorts the input; throws std::invalid_argument on duplicates.
  static PointSet from_indices(std::vector<Index> indices);
  static PointSet from_sorted(std::vector<Index> indices);
  static PointSet range(Index n);

  std::size_t size() const { return idx_.size(); }
  bool empty() const { return idx_.empty(); }
  Index operator[](std::size_t i) const { return idx_[i]; }
  auto begin() const { return idx_.begin(); }
  auto end() const { return idx_.end(); }
  const std::vector<Index>& indices() const { return idx_; }

  bool contains(Index x) const;
  // Rank of x inside the set.
  std::optional<std::size_t> position(Index x) const;
  bool is_subset_of(const PointSet& other) const;
  // Largest index + 1, or 0 for the empty set.
  Index bound() const { return idx_.empty() ? 0 : idx_.back() + 1; }

  friend bool operator==(const PointSet&, const PointSet&) = default;

 private:
  explicit PointSet(std::vector<Index> idx) : idx_(std::move(idx)) {}
  std::vector<Index> idx_;
};

PointSet set_union(const PointSet& a, const PointSet& b);
PointSet set_intersection(const PointSet& a, const PointSet& b);
PointSet set_difference(const PointSet& a, const PointSet& b);

}  // namespace ght
