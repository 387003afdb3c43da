// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <span>
#include <vector>

#include "ghtangent/chart.hpp"
#include "ghtangent/common.hpp"
#include "ghtangent/space.hpp"

namespace ght {

// Dimensional decomposition of a space: fibre dimension k(x) per point and
// the strata A_k of positive-weight points.
class GHBundle {
 public:
  // Fibre dimensions from the space's dim_label.
  static GHBundle from_space(const Space& space);
  // Fibre dimensions from chart dimensions; points outside every chart fall
  // back to dim_label when present and are rejected otherwise.
  static GHBundle from_atlas(const Space& space, const Atlas& atlas);

  std::size_t size() const { return dims_.size(); }
  int fiber_dim(Index x) const { return dims_.at(x); }
  const std::vector<int>& fiber_dims() const { return dims_; }
  const std::vector<double>& weights() const { return weights_; }
  // A_k; empty for dimensions that do not occur.
  PointSet stratum(int k) const;
  std::vector<int> dimensions() const;

 private:
  GHBundle(std::vector<int> dims, std::vector<double> weights);
  std::vector<int> dims_;
  std::vector<double> weights_;
  std::map<int, PointSet> strata_;
};

struct TangentTag {};
struct CotangentTag {};

// One vector per point, of length k(x). Vectors and covectors share the
// representation and differ only in type.
template <class Tag>
class Field {
 public:
  Field() = default;
  explicit Field(std::vector<Vector> values) : v_(std::move(values)) {}
  static Field zeros(std::span<const int> dims) {
    std::vector<Vector> v;
    v.reserve(dims.size());
    for (int k : dims) v.push_back(Vector::Zero(k));
    return Field(std::move(v));
  }
  static Field zeros(const GHBundle& b) { return zeros(b.fiber_dims()); }

  std::size_t size() const { return v_.size(); }
  Vector& operator[](Index x) { return v_[x]; }
  const Vector& operator[](Index x) const { return v_[x]; }
  const std::vector<Vector>& values() const { return v_; }

 private:
  std::vector<Vector> v_;
};

using Section = Field<TangentTag>;
using CoSection = Field<CotangentTag>;

// Throws FiberMismatchError unless v has one vector of length k(x) per point.
template <class Tag>
void check_fibers(const GHBundle& bundle, const Field<Tag>& v);

template <class Tag>
Field<Tag> combine(double alpha, const Field<Tag>& v, double beta, const Field<Tag>& w);
template <class Tag>
Field<Tag> multiply(std::span<const double> h, const Field<Tag>& v);
template <class Tag>
std::vector<double> pointwise_norm(const Field<Tag>& v);
// sqrt(sum_x w_x |v(x)|^2).
template <class Tag>
double l2_norm(std::span<const double> weights, const Field<Tag>& v);
double l2_norm(std::span<const double> weights, std::span<const double> f);

// Random section with i.i.d. standard normal entries.
Section random_section(std::span<const int> dims, std::uint64_t seed);

// Number of sections when they are pointwise independent and generating on A
// outside an exceptional set of mass <= eta m(A); nullopt otherwise.
std::optional<std::size_t> local_dimension(const GHBundle& bundle, std::span<const Section> sections,
                                           const PointSet& a, double eta);

}  // namespace ght
