// SPDX-License-Identifier: Apache-2.0
#include "ghtangent/lip.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ght {

namespace {

void require_field(const Space& space, std::size_t size) {
  if (size != space.size()) throw std::invalid_argument("field size differs from point count");
}

double pair_distance(const Space& space, Index a, Index b) {
  const double d = space.dist(a, b);
  if (!(d > 0.0))
    throw InvalidSpaceError("zero distance between distinct points " + std::to_string(a) + " and " +
                            std::to_string(b));
  return d;
}

}  // namespace

double lipschitz_constant(const Space& space, std::span<const double> f, const PointSet& e) {
  require_field(space, f.size());
  space.check(e);
  if (e.empty()) throw std::invalid_argument("lipschitz_constant: empty set");
  double best = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i)
    for (std::size_t j = i + 1; j < e.size(); ++j)
      best = std::max(best, std::abs(f[e[i]] - f[e[j]]) / pair_distance(space, e[i], e[j]));
  return best;
}

double lipschitz_constant(const Space& space, const RowMatrix& f, const PointSet& e) {
  require_field(space, static_cast<std::size_t>(f.rows()));
  space.check(e);
  if (e.empty()) throw std::invalid_argument("lipschitz_constant: empty set");
  double best = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i)
    for (std::size_t j = i + 1; j < e.size(); ++j) {
      const auto a = static_cast<Eigen::Index>(e[i]), b = static_cast<Eigen::Index>(e[j]);
      best = std::max(best, (f.row(a) - f.row(b)).norm() / pair_distance(space, e[i], e[j]));
    }
  return best;
}

double local_lip(const Space& space, std::span<const double> f, Index x, double r) {
  return local_lip(space, f, x, r, space.all());
}

double local_lip(const Space& space, std::span<const double> f, Index x, double r,
                 const PointSet& domain) {
  require_field(space, f.size());
  space.check_index(x);
  space.check(domain);
  double best = 0.0;
  for (Index y : domain) {
    if (y == x) continue;
    const double d = space.dist(x, y);
    if (d < r) best = std::max(best, std::abs(f[y] - f[x]) / pair_distance(space, x, y));
  }
  return best;
}

std::vector<double> mcshane_extend(const Space& space, std::span<const double> f, const PointSet& e) {
  if (e.empty()) throw std::invalid_argument("mcshane_extend: empty domain");
  const double lip = lipschitz_constant(space, f, e);
  std::vector<double> out(space.size());
  for (Index x = 0; x < space.size(); ++x) {
    if (e.contains(x)) {
      out[x] = f[x];
      continue;
    }
    double best = std::numeric_limits<double>::infinity();
    for (Index y : e) best = std::min(best, f[y] + lip * space.dist(x, y));
    out[x] = best;
  }
  return out;
}

RowMatrix mcshane_extend(const Space& space, const RowMatrix& f, const PointSet& e) {
  require_field(space, static_cast<std::size_t>(f.rows()));
  RowMatrix out(f.rows(), f.cols());
  std::vector<double> col(space.size());
  for (Eigen::Index c = 0; c < f.cols(); ++c) {
    for (Index i = 0; i < space.size(); ++i) col[i] = f(static_cast<Eigen::Index>(i), c);
    const auto ext = mcshane_extend(space, col, e);
    for (Index i = 0; i < space.size(); ++i) out(static_cast<Eigen::Index>(i), c) = ext[i];
  }
  return out;
}

RestrictedLip restricted_lip_compare(const Space& space, std::span<const double> f,
                                     const PointSet& e, Index x, double r) {
  if (!e.contains(x)) throw std::invalid_argument("restricted_lip_compare: x not in E");
  return {local_lip(space, f, x, r, e), local_lip(space, f, x, r)};
}

Index PointMap::operator()(Index x) const {
  const auto pos = domain.position(x);
  if (!pos) throw std::out_of_range("PointMap: point outside the domain");
  return image[*pos];
}

double map_lipschitz_constant(const Space& from, const Space& to, const PointMap& phi) {
  from.check(phi.domain);
  if (phi.image.size() != phi.domain.size())
    throw std::invalid_argument("PointMap: image size differs from domain size");
  for (Index y : phi.image) to.check_index(y);
  double best = 0.0;
  for (std::size_t i = 0; i < phi.domain.size(); ++i)
    for (std::size_t j = i + 1; j < phi.domain.size(); ++j)
      best = std::max(best, to.dist(phi.image[i], phi.image[j]) /
                                pair_distance(from, phi.domain[i], phi.domain[j]));
  return best;
}

double chain_rule_defect(const Space& from, const Space& to, std::span<const double> f,
                         const PointMap& phi, Index x, double r) {
  require_field(to, f.size());
  if (!phi.domain.contains(x)) throw std::invalid_argument("chain_rule_defect: x outside the map domain");
  const double lip_phi = map_lipschitz_constant(from, to, phi);

  std::vector<double> pulled(from.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < phi.domain.size(); ++i) pulled[phi.domain[i]] = f[phi.image[i]];
  const double lhs = local_lip(from, pulled, x, r, phi.domain);
  // A zero-Lipschitz map is constant on its domain, so lip(f∘φ) vanishes too.
  const double rhs = lip_phi > 0.0 ? lip_phi * local_lip(to, f, phi(x), r * lip_phi) : 0.0;
  return lhs - rhs;
}

}  // namespace ght
