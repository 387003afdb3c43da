// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <random>
#include <vector>

#include "ghtangent/space.hpp"

namespace ght::test {

// Uniform samples of [0,1]^k with weight 1/n each.
inline Space uniform_cube(std::size_t n, int k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RowMatrix x(static_cast<Eigen::Index>(n), k);
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (int c = 0; c < k; ++c) x(i, c) = u(rng);
  return Space::euclidean(std::move(x), std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

// Regular grid {0, h, ..., (side-1) h}^k with unit weights.
inline Space grid(std::size_t side, int k, double h = 1.0) {
  std::size_t n = 1;
  for (int c = 0; c < k; ++c) n *= side;
  RowMatrix x(static_cast<Eigen::Index>(n), k);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t r = i;
    for (int c = 0; c < k; ++c) {
      x(static_cast<Eigen::Index>(i), c) = h * static_cast<double>(r % side);
      r /= side;
    }
  }
  return Space::euclidean(std::move(x), std::vector<double>(n, 1.0));
}

inline std::vector<double> brute_dist_row(const Space& s, Index x) {
  std::vector<double> d(s.size());
  const RowMatrix& c = s.coords();
  for (Index y = 0; y < s.size(); ++y)
    d[y] = (c.row(static_cast<Eigen::Index>(x)) - c.row(static_cast<Eigen::Index>(y))).norm();
  return d;
}

}  // namespace ght::test
