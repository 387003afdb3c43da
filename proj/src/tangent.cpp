// SPDX-License-Identifier: Apache-2.0
#include "ghtangent/tangent.hpp"

#include <cmath>
#include <random>

namespace ght {

GHBundle::GHBundle(std::vector<int> dims, std::vector<double> weights)
    : dims_(std::move(dims)), weights_(std::move(weights)) {
  std::map<int, std::vector<Index>> strata;
  for (Index x = 0; x < dims_.size(); ++x)
    if (weights_[x] > 0.0) strata[dims_[x]].push_back(x);
  for (auto& [k, pts] : strata) strata_.emplace(k, PointSet::from_sorted(std::move(pts)));
}

GHBundle GHBundle::from_space(const Space& space) {
  if (!space.has_dim_label()) throw std::invalid_argument("GHBundle: space has no dim_label");
  return GHBundle(space.dim_label(), space.weights());
}

GHBundle GHBundle::from_atlas(const Space& space, const Atlas& atlas) {
  std::vector<int> dims(space.size(), 0);
  for (const auto& c : atlas.charts)
    for (Index x : c.domain) dims.at(x) = c.k;
  for (Index x = 0; x < space.size(); ++x) {
    if (space.has_dim_label()) {
      if (dims[x] == 0) dims[x] = space.dim_label(x);
      else if (dims[x] != space.dim_label(x)) throw FiberMismatchError("GHBundle: chart dimension contradicts dim_label");
    }
    if (dims[x] == 0) throw std::invalid_argument("GHBundle: point outside every chart and unlabelled");
  }
  return GHBundle(std::move(dims), space.weights());
}

PointSet GHBundle::stratum(int k) const {
  auto it = strata_.find(k);
  return it == strata_.end() ? PointSet{} : it->second;
}

std::vector<int> GHBundle::dimensions() const {
  std::vector<int> out;
  for (const auto& [k, s] : strata_) out.push_back(k);
  return out;
}

template <class Tag>
void check_fibers(const GHBundle& bundle, const Field<Tag>& v) {
  if (v.size() != bundle.size()) throw FiberMismatchError("section size differs from bundle size");
  for (Index x = 0; x < v.size(); ++x)
    if (v[x].size() != bundle.fiber_dim(x))
      throw FiberMismatchError("section fibre dimension mismatch at point " + std::to_string(x));
}

namespace {

template <class Tag>
void check_same(const Field<Tag>& v, const Field<Tag>& w) {
  if (v.size() != w.size()) throw FiberMismatchError("sections have different sizes");
  for (Index x = 0; x < v.size(); ++x)
    if (v[x].size() != w[x].size()) throw FiberMismatchError("fibre dimension mismatch at point " + std::to_string(x));
}

}  // namespace

template <class Tag>
Field<Tag> combine(double alpha, const Field<Tag>& v, double beta, const Field<Tag>& w) {
  check_same(v, w);
  std::vector<Vector> out(v.size());
  for (Index x = 0; x < v.size(); ++x) out[x] = alpha * v[x] + beta * w[x];
  return Field<Tag>(std::move(out));
}

template <class Tag>
Field<Tag> multiply(std::span<const double> h, const Field<Tag>& v) {
  if (h.size() != v.size()) throw FiberMismatchError("scalar field size differs from section size");
  std::vector<Vector> out(v.size());
  for (Index x = 0; x < v.size(); ++x) out[x] = h[x] * v[x];
  return Field<Tag>(std::move(out));
}

template <class Tag>
std::vector<double> pointwise_norm(const Field<Tag>& v) {
  std::vector<double> out(v.size());
  for (Index x = 0; x < v.size(); ++x) out[x] = v[x].norm();
  return out;
}

template <class Tag>
double l2_norm(std::span<const double> weights, const Field<Tag>& v) {
  if (weights.size() != v.size()) throw FiberMismatchError("weights size differs from section size");
  double s = 0.0;
  for (Index x = 0; x < v.size(); ++x) s += weights[x] * v[x].squaredNorm();
  return std::sqrt(s);
}

double l2_norm(std::span<const double> weights, std::span<const double> f) {
  if (weights.size() != f.size()) throw std::invalid_argument("weights size differs from field size");
  double s = 0.0;
  for (Index x = 0; x < f.size(); ++x) s += weights[x] * f[x] * f[x];
  return std::sqrt(s);
}

#define GHT_INSTANTIATE(Tag)                                                                  \
  template void check_fibers(const GHBundle&, const Field<Tag>&);                             \
  template Field<Tag> combine(double, const Field<Tag>&, double, const Field<Tag>&);          \
  template Field<Tag> multiply(std::span<const double>, const Field<Tag>&);                   \
  template std::vector<double> pointwise_norm(const Field<Tag>&);                             \
  template double l2_norm(std::span<const double>, const Field<Tag>&);
GHT_INSTANTIATE(TangentTag)
GHT_INSTANTIATE(CotangentTag)
#undef GHT_INSTANTIATE

Section random_section(std::span<const int> dims, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Vector> v;
  v.reserve(dims.size());
  for (int k : dims) {
    Vector e(k);
    for (int i = 0; i < k; ++i) e(i) = g(rng);
    v.push_back(std::move(e));
  }
  return Section(std::move(v));
}

std::optional<std::size_t> local_dimension(const GHBundle& bundle, std::span<const Section> sections,
                                           const PointSet& a, double eta) {
  for (const auto& s : sections) check_fibers(bundle, s);
  const auto& w = bundle.weights();
  double mass = 0.0, dependent = 0.0, deficient = 0.0;
  const auto count = static_cast<Eigen::Index>(sections.size());
  for (Index x : a) {
    if (x >= bundle.size()) throw std::out_of_range("local_dimension: point outside the bundle");
    mass += w[x];
    const int k = bundle.fiber_dim(x);
    Eigen::Index rank = 0;
    if (count > 0) {
      Matrix m(k, count);
      for (Eigen::Index j = 0; j < count; ++j) m.col(j) = sections[static_cast<std::size_t>(j)][x];
      Eigen::JacobiSVD<Matrix> svd(m);
      const Vector s = svd.singularValues();
      const double floor = 1e-10 * std::max(1.0, s.size() ? s(0) : 0.0);
      for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > floor) ++rank;
    }
    if (rank < count) dependent += w[x];
    if (rank < k) deficient += w[x];
  }
  if (!(mass > 0.0)) throw std::invalid_argument("local_dimension: set has zero mass");
  if (dependent > eta * mass || deficient > eta * mass) return std::nullopt;
  return sections.size();
}

}  // namespace ght
