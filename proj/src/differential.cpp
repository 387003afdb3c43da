// SPDX-License-Identifier: Apache-2.0
#include "ghtangent/differential.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ghtangent/parallel.hpp"

namespace ght {

Matrix fit_differential(const RowMatrix& dy, const RowMatrix& dz) {
  const auto n = dy.rows(), k = dy.cols();
  if (dz.rows() != n) throw std::invalid_argument("fit_differential: offset counts differ");
  if (n < k) throw RankDeficientError("fit_differential: fewer neighbours than dimensions");
  Eigen::JacobiSVD<Matrix> svd(Matrix(dy), Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector s = svd.singularValues();
  if (s.size() == 0 || !(s(s.size() - 1) > kRankTolerance * s(0)))
    throw RankDeficientError("fit_differential: neighbour offsets are rank deficient");
  const Matrix xt = svd.solve(Matrix(dz));  // k x k'
  return xt.transpose();
}

Matrix estimate_differential(const std::function<Vector(const Vector&)>& f, const Vector& y, double h,
                             const RowMatrix& neighbors) {
  if (neighbors.cols() != y.size()) throw std::invalid_argument("estimate_differential: dimension mismatch");
  const Vector fy = f(y);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < neighbors.rows(); ++i) {
    const double d = (neighbors.row(i).transpose() - y).norm();
    if (d > 0.0 && d < h) keep.push_back(i);
  }
  RowMatrix dy(static_cast<Eigen::Index>(keep.size()), y.size());
  RowMatrix dz(static_cast<Eigen::Index>(keep.size()), fy.size());
  for (std::size_t r = 0; r < keep.size(); ++r) {
    const Vector p = neighbors.row(keep[r]).transpose();
    dy.row(static_cast<Eigen::Index>(r)) = (p - y).transpose();
    dz.row(static_cast<Eigen::Index>(r)) = (f(p) - fy).transpose();
  }
  return fit_differential(dy, dz);
}

double default_fit_radius(const RowMatrix& image) {
  const auto n = static_cast<std::size_t>(image.rows());
  if (n < 2) throw std::invalid_argument("default_fit_radius: need at least two points");
  const KdTree tree(image);
  std::vector<double> nn(n);
  for (std::size_t i = 0; i < n; ++i) tree.nearest(image.row(static_cast<Eigen::Index>(i)).data(), &nn[i], i);
  const auto mid = nn.begin() + static_cast<std::ptrdiff_t>((n - 1) / 2);
  std::nth_element(nn.begin(), mid, nn.end());
  return 4.0 * *mid;
}

SampledMap::SampledMap(RowMatrix source, RowMatrix target)
    : src_(std::move(source)), tgt_(std::move(target)), tree_(src_) {
  if (src_.rows() != tgt_.rows()) throw std::invalid_argument("SampledMap: row counts differ");
}

Matrix SampledMap::differential(std::size_t row, double h) const {
  if (row >= size()) throw std::out_of_range("SampledMap: row out of range");
  if (!(h > 0.0)) throw std::invalid_argument("SampledMap: fit radius must be positive");
  const auto c = static_cast<Eigen::Index>(row);
  std::vector<std::size_t> nb;
  // Isolated samples get the radius doubled until the offsets span; the
  // attempt at the full-set radius is final.
  for (int attempt = 0;; ++attempt, h *= 2.0) {
    nb.clear();
    tree_.radius(src_.row(c).data(), h, nb);
    nb.erase(std::remove(nb.begin(), nb.end(), row), nb.end());
    const bool last = nb.size() + 1 == size() || attempt == kMaxRadiusDoublings;
    if (nb.size() < static_cast<std::size_t>(src_.cols()) && !last) continue;
    RowMatrix dy(static_cast<Eigen::Index>(nb.size()), src_.cols());
    RowMatrix dz(static_cast<Eigen::Index>(nb.size()), tgt_.cols());
    for (std::size_t r = 0; r < nb.size(); ++r) {
      const auto j = static_cast<Eigen::Index>(nb[r]);
      dy.row(static_cast<Eigen::Index>(r)) = src_.row(j) - src_.row(c);
      dz.row(static_cast<Eigen::Index>(r)) = tgt_.row(j) - tgt_.row(c);
    }
    if (last) return fit_differential(dy, dz);
    try {
      return fit_differential(dy, dz);
    } catch (const RankDeficientError&) {
    }
  }
}

std::optional<Matrix> SampledMap::try_differential(std::size_t row, double h) const {
  try {
    return differential(row, h);
  } catch (const RankDeficientError&) {
    return std::nullopt;
  }
}

std::vector<Matrix> SampledMap::differentials(double h, unsigned threads) const {
  std::vector<Matrix> out(size());
  parallel_for(size(), threads, [&](std::size_t i) { out[i] = differential(i, h); });
  return out;
}

}  // namespace ght
