// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <utility>
#include <vector>

#include "ghtangent/common.hpp"
#include "ghtangent/space.hpp"

namespace ght {

// Scalar fields are spans of length space.size(); entries outside the domain
// of interest are ignored (and may be NaN).

// Max over distinct pairs of |f(x) - f(y)| / dist(x, y); 0 for singletons.
double lipschitz_constant(const Space& space, std::span<const double> f, const PointSet& e);
// Same for an R^n-valued field (one row per point) with the Euclidean norm.
double lipschitz_constant(const Space& space, const RowMatrix& f, const PointSet& e);

// Max over y in B_r(x) ∩ domain, y != x, of |f(y) - f(x)| / dist(y, x).
double local_lip(const Space& space, std::span<const double> f, Index x, double r);
double local_lip(const Space& space, std::span<const double> f, Index x, double r,
                 const PointSet& domain);

// min over y in E of f(y) + L dist(x, y), with L = lipschitz_constant(f, E).
// Returns f itself on E.
std::vector<double> mcshane_extend(const Space& space, std::span<const double> f, const PointSet& e);
// Componentwise extension; each column uses its own constant.
RowMatrix mcshane_extend(const Space& space, const RowMatrix& f, const PointSet& e);

struct RestrictedLip {
  double lip_e;
  double lip_full;
};
RestrictedLip restricted_lip_compare(const Space& space, std::span<const double> f,
                                     const PointSet& e, Index x, double r);

// Point map E -> Y given as image[i] for domain[i].
struct PointMap {
  PointSet domain;
  std::vector<Index> image;

  Index operator()(Index x) const;
};

// Lip of the map over pairs of its domain.
double map_lipschitz_constant(const Space& from, const Space& to, const PointMap& phi);

// local_lip(f∘φ, x, r) - Lip(φ) local_lip(f, φ(x), r Lip(φ)); f lives on `to`.
double chain_rule_defect(const Space& from, const Space& to, std::span<const double> f,
                         const PointMap& phi, Index x, double r);

}  // namespace ght
