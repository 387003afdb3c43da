// SPDX-License-Identifier: Apache-2.0
#include "ghtangent/space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "ghtangent/kdtree.hpp"

namespace ght {

namespace {

void check_labels(std::size_t n, const std::vector<int>& labels) {
  if (!labels.empty() && labels.size() != n)
    throw std::invalid_argument("Space: dim_label size differs from point count");
  for (int k : labels)
    if (k < 1) throw std::invalid_argument("Space: dim_label entries must be >= 1");
}

double sum(const std::vector<double>& w) {
  double s = 0.0;
  for (double x : w) s += x;
  return s;
}

}  // namespace

Space Space::euclidean(RowMatrix coords, std::vector<double> weights, std::vector<int> dim_label) {
  const auto n = static_cast<std::size_t>(coords.rows());
  if (n == 0) throw std::invalid_argument("Space: no points");
  if (coords.cols() == 0) throw std::invalid_argument("Space: zero-dimensional coordinates");
  if (weights.size() != n) throw std::invalid_argument("Space: weights size differs from point count");
  check_labels(n, dim_label);
  Space s;
  s.n_ = n;
  s.coords_ = std::move(coords);
  s.weights_ = std::move(weights);
  s.dim_label_ = std::move(dim_label);
  s.total_mass_ = sum(s.weights_);
  return s;
}

Space Space::from_table(std::size_t n, std::vector<double> table, std::vector<double> weights,
                        std::vector<int> dim_label) {
  if (n == 0) throw std::invalid_argument("Space: no points");
  if (table.size() != n * n) throw std::invalid_argument("Space: distance table is not N x N");
  if (weights.size() != n) throw std::invalid_argument("Space: weights size differs from point count");
  check_labels(n, dim_label);
  Space s;
  s.n_ = n;
  s.table_ = std::move(table);
  s.weights_ = std::move(weights);
  s.dim_label_ = std::move(dim_label);
  s.total_mass_ = sum(s.weights_);
  return s;
}

const RowMatrix& Space::coords() const {
  if (!has_coords()) throw std::logic_error("Space: table-backed space has no coordinates");
  return coords_;
}

int Space::dim_label(Index i) const {
  check_index(i);
  if (dim_label_.empty()) throw std::logic_error("Space: no dim_label");
  return dim_label_[i];
}

void Space::check_index(Index x) const {
  if (x >= n_) throw std::out_of_range("point index " + std::to_string(x) + " out of range");
}

void Space::check(const PointSet& e) const {
  if (e.bound() > n_) throw std::out_of_range("PointSet references a point outside the space");
}

std::vector<double> Space::distance_row(Index x) const {
  check_index(x);
  std::vector<double> row(n_);
  for (Index y = 0; y < n_; ++y) row[y] = dist(x, y);
  return row;
}

std::vector<double> Space::distance_table() const {
  if (!table_.empty()) return table_;
  std::vector<double> t(n_ * n_);
  for (Index i = 0; i < n_; ++i)
    for (Index j = 0; j < n_; ++j) t[i * n_ + j] = dist(i, j);
  return t;
}

std::string to_string(Axiom a) {
  switch (a) {
    case Axiom::kNonFinite: return "non_finite";
    case Axiom::kNonzeroDiagonal: return "nonzero_diagonal";
    case Axiom::kNegativeDistance: return "negative_distance";
    case Axiom::kAsymmetric: return "asymmetric";
    case Axiom::kSeparation: return "separation";
    case Axiom::kTriangle: return "triangle";
    case Axiom::kNegativeWeight: return "negative_weight";
    case Axiom::kZeroTotalMass: return "zero_total_mass";
  }
  return "unknown";
}

const Violation* ValidationReport::find(Axiom a) const {
  for (const auto& v : violations)
    if (v.axiom == a) return &v;
  return nullptr;
}

namespace {

class ViolationLog {
 public:
  void add(Axiom a, std::vector<Index> witness, double magnitude) {
    for (auto& v : log_)
      if (v.axiom == a) {
        ++v.count;
        return;
      }
    log_.push_back({a, std::move(witness), magnitude, 1});
  }
  std::vector<Violation> take() {
    std::sort(log_.begin(), log_.end(),
              [](const Violation& x, const Violation& y) { return x.axiom < y.axiom; });
    return std::move(log_);
  }

 private:
  std::vector<Violation> log_;
};

constexpr double kTriangleTol = 1e-12;

void check_pair(const Space& s, Index i, Index j, ViolationLog& log) {
  const double dij = s.dist(i, j);
  const double dji = s.dist(j, i);
  if (!std::isfinite(dij)) {
    log.add(Axiom::kNonFinite, {i, j}, dij);
    return;
  }
  if (dij < 0.0) log.add(Axiom::kNegativeDistance, {i, j}, -dij);
  if (dij != dji) log.add(Axiom::kAsymmetric, {i, j}, std::abs(dij - dji));
  if (i != j && dij == 0.0) log.add(Axiom::kSeparation, {i, j}, 0.0);
}

void check_triple(const Space& s, Index i, Index l, Index j, ViolationLog& log) {
  const double direct = s.dist(i, j);
  const double via = s.dist(i, l) + s.dist(l, j);
  const double excess = direct - via;
  if (excess > kTriangleTol * std::max(1.0, direct)) log.add(Axiom::kTriangle, {i, l, j}, excess);
}

}  // namespace

ValidationReport validate_space(const Space& space, std::size_t triple_samples, std::uint64_t seed) {
  ValidationReport rep;
  ViolationLog log;
  const std::size_t n = space.size();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Index> pick(0, n - 1);

  double mass = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double w = space.weight(i);
    if (!std::isfinite(w)) log.add(Axiom::kNonFinite, {i}, w);
    else if (w < 0.0) log.add(Axiom::kNegativeWeight, {i}, -w);
    mass += w;
    const double dii = space.dist(i, i);
    if (dii != 0.0) log.add(Axiom::kNonzeroDiagonal, {i}, std::abs(dii));
  }
  if (!(mass > 0.0)) log.add(Axiom::kZeroTotalMass, {}, mass);

  if (n <= 4096) {
    for (Index i = 0; i < n; ++i)
      for (Index j = i + 1; j < n; ++j) check_pair(space, i, j, log);
    rep.pairs_checked = n * (n - 1) / 2;
  } else {
    const std::size_t budget = std::max<std::size_t>(triple_samples, 1);
    for (std::size_t s = 0; s < budget; ++s) {
      const Index i = pick(rng), j = pick(rng);
      if (i != j) check_pair(space, std::min(i, j), std::max(i, j), log);
    }
    rep.pairs_checked = budget;
  }

  const double n3 = static_cast<double>(n) * static_cast<double>(n) * static_cast<double>(n);
  if (n3 <= static_cast<double>(triple_samples)) {
    rep.exhaustive_triples = true;
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j)
        for (Index l = 0; l < n; ++l) check_triple(space, i, l, j, log);
    rep.triples_checked = n * n * n;
  } else {
    for (std::size_t s = 0; s < triple_samples; ++s) check_triple(space, pick(rng), pick(rng), pick(rng), log);
    rep.triples_checked = triple_samples;
  }
  rep.violations = log.take();
  return rep;
}

PointSet ball(const Space& space, Index x, double r) {
  space.check_index(x);
  if (!(r > 0.0)) throw std::invalid_argument("ball: radius must be positive");
  std::vector<Index> out;
  for (Index y = 0; y < space.size(); ++y)
    if (space.dist(x, y) < r) out.push_back(y);
  return PointSet::from_sorted(std::move(out));
}

double measure(const Space& space, const PointSet& e) {
  space.check(e);
  double s = 0.0;
  for (Index i : e) s += space.weight(i);
  return s;
}

namespace {

std::vector<char> mask_of(const Space& space, const PointSet& e) {
  space.check(e);
  std::vector<char> m(space.size(), 0);
  for (Index i : e) m[i] = 1;
  return m;
}

// (m(E ∩ B), m(B)) from a precomputed distance row.
std::pair<double, double> ball_masses(const Space& space, const std::vector<double>& row,
                                      const std::vector<char>& in_e, double r) {
  double me = 0.0, mb = 0.0;
  for (Index y = 0; y < space.size(); ++y)
    if (row[y] < r) {
      mb += space.weight(y);
      if (in_e[y]) me += space.weight(y);
    }
  return {me, mb};
}

void require_scale(double r) {
  if (!(r > 0.0)) throw std::invalid_argument("radius must be positive");
}

}  // namespace

double density(const Space& space, const PointSet& e, Index x, double r) {
  space.check_index(x);
  require_scale(r);
  const auto [me, mb] = ball_masses(space, space.distance_row(x), mask_of(space, e), r);
  if (!(mb > 0.0)) throw EmptyBallError("density: ball has zero mass");
  return me / mb;
}

PointSet density_one_points(const Space& space, const PointSet& e, std::span<const double> scales,
                            double eta) {
  if (scales.empty()) throw std::invalid_argument("density_one_points: empty scale list");
  for (std::size_t i = 0; i < scales.size(); ++i) {
    require_scale(scales[i]);
    if (i > 0 && !(scales[i] < scales[i - 1]))
      throw std::invalid_argument("density_one_points: scales must be strictly decreasing");
  }
  const auto in_e = mask_of(space, e);
  std::vector<Index> out;
  for (Index x : e) {
    const auto row = space.distance_row(x);
    bool keep = true;
    for (double r : scales) {
      const auto [me, mb] = ball_masses(space, row, in_e, r);
      if (!(mb > 0.0) || me / mb < 1.0 - eta) {
        keep = false;
        break;
      }
    }
    if (keep) out.push_back(x);
  }
  return PointSet::from_sorted(std::move(out));
}

double doubling_constant(const Space& space, std::span<const double> radii,
                         const std::optional<PointSet>& centers) {
  for (double r : radii) require_scale(r);
  const PointSet c = centers ? *centers : space.all();
  space.check(c);
  double best = 1.0;
  for (Index x : c) {
    const auto row = space.distance_row(x);
    for (double r : radii) {
      double inner = 0.0, outer = 0.0;
      for (Index y = 0; y < space.size(); ++y) {
        if (row[y] < 2.0 * r) outer += space.weight(y);
        if (row[y] < r) inner += space.weight(y);
      }
      if (!(inner > 0.0)) throw EmptyBallError("doubling_constant: ball has zero mass");
      best = std::max(best, outer / inner);
    }
  }
  return best;
}

double ball_average(const Space& space, std::span<const double> f, Index x, double r) {
  space.check_index(x);
  require_scale(r);
  if (f.size() != space.size()) throw std::invalid_argument("ball_average: field size mismatch");
  double num = 0.0, mass = 0.0;
  for (Index y = 0; y < space.size(); ++y)
    if (space.dist(x, y) < r) {
      num += space.weight(y) * f[y];
      mass += space.weight(y);
    }
  if (!(mass > 0.0)) throw EmptyBallError("ball_average: ball has zero mass");
  return num / mass;
}

double sampling_resolution(const Space& space) {
  const std::size_t n = space.size();
  if (n < 2) return 0.0;
  std::vector<double> nn(n, std::numeric_limits<double>::infinity());
  if (space.has_coords()) {
    const KdTree tree(space.coords());
    for (Index i = 0; i < n; ++i) tree.nearest(space.coords().row(static_cast<Eigen::Index>(i)).data(), &nn[i], i);
  } else {
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j)
        if (i != j) nn[i] = std::min(nn[i], space.dist(i, j));
  }
  const auto mid = nn.begin() + static_cast<std::ptrdiff_t>((n - 1) / 2);
  std::nth_element(nn.begin(), mid, nn.end());
  return *mid;
}

std::vector<double> distance_to_set(const Space& space, const PointSet& e) {
  space.check(e);
  if (e.empty()) throw std::invalid_argument("distance_to_set: empty set");
  std::vector<double> d(space.size(), std::numeric_limits<double>::infinity());
  for (Index y = 0; y < space.size(); ++y)
    for (Index z : e) d[y] = std::min(d[y], space.dist(y, z));
  return d;
}

double density_point_gap(const Space& space, const PointSet& e, Index x, double r) {
  space.check_index(x);
  require_scale(r);
  const auto b = ball(space, x, r);
  if (e.empty()) throw std::invalid_argument("density_point_gap: empty set");
  double gap = 0.0;
  for (Index y : b) {
    if (y == x) continue;
    double dy = std::numeric_limits<double>::infinity();
    for (Index z : e) dy = std::min(dy, space.dist(y, z));
    gap = std::max(gap, dy / space.dist(y, x));
  }
  return gap;
}

}  // namespace ght
