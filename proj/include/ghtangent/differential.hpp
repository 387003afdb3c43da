// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "ghtangent/common.hpp"
#include "ghtangent/kdtree.hpp"

namespace ght {

// Relative singular-value floor of the neighbour offset matrix.
inline constexpr double kRankTolerance = 1e-10;
inline constexpr int kMaxRadiusDoublings = 6;

// Least-squares A minimising sum_i |dz_i - A dy_i|^2 for offset rows dy (n x k)
// and dz (n x k'). Throws RankDeficientError unless dy has full column rank.
Matrix fit_differential(const RowMatrix& dy, const RowMatrix& dz);

// Differential at y of F, fitted on the neighbour points within h of y.
Matrix estimate_differential(const std::function<Vector(const Vector&)>& f, const Vector& y, double h,
                             const RowMatrix& neighbors);

// 4 x median nearest-neighbour spacing of the rows.
double default_fit_radius(const RowMatrix& image);

// Sampled map source row i -> target row i. Differentials are fitted over the
// other rows whose source lies strictly within h; when those offsets do not
// span, h is doubled up to kMaxRadiusDoublings times.
class SampledMap {
 public:
  SampledMap(RowMatrix source, RowMatrix target);

  std::size_t size() const { return static_cast<std::size_t>(src_.rows()); }
  const RowMatrix& source() const { return src_; }
  const RowMatrix& target() const { return tgt_; }

  Matrix differential(std::size_t row, double h) const;
  std::optional<Matrix> try_differential(std::size_t row, double h) const;
  std::vector<Matrix> differentials(double h, unsigned threads = 1) const;

 private:
  RowMatrix src_, tgt_;
  KdTree tree_;
};

}  // namespace ght
