// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ghtangent/common.hpp"
#include "ghtangent/point_set.hpp"

namespace ght {

// Finite weighted metric space. Distances come either from stored Euclidean
// coordinates (one row per point) or from a dense row-major N x N table.
// Immutable after construction.
class Space {
 public:
  static Space euclidean(RowMatrix coords, std::vector<double> weights,
                         std::vector<int> dim_label = {});
  static Space from_table(std::size_t n, std::vector<double> table, std::vector<double> weights,
                          std::vector<int> dim_label = {});

  std::size_t size() const { return n_; }
  // Unchecked; callers validate indices at the API boundary.
  double dist(Index i, Index j) const {
    if (table_.empty()) {
      const double* a = coords_.data() + i * static_cast<std::size_t>(coords_.cols());
      const double* b = coords_.data() + j * static_cast<std::size_t>(coords_.cols());
      double s = 0.0;
      for (Eigen::Index c = 0; c < coords_.cols(); ++c) {
        const double e = a[c] - b[c];
        s += e * e;
      }
      return std::sqrt(s);
    }
    return table_[i * n_ + j];
  }
  double weight(Index i) const { return weights_[i]; }
  const std::vector<double>& weights() const { return weights_; }
  double total_mass() const { return total_mass_; }

  bool has_coords() const { return table_.empty(); }
  const RowMatrix& coords() const;
  int ambient_dim() const { return static_cast<int>(coords_.cols()); }
  const std::vector<double>& table() const { return table_; }

  bool has_dim_label() const { return !dim_label_.empty(); }
  const std::vector<int>& dim_label() const { return dim_label_; }
  int dim_label(Index i) const;

  PointSet all() const { return PointSet::range(n_); }
  void check_index(Index x) const;
  void check(const PointSet& e) const;

  std::vector<double> distance_row(Index x) const;
  // Dense row-major table; recomputed from coordinates when needed.
  std::vector<double> distance_table() const;

 private:
  Space() = default;
  std::size_t n_ = 0;
  RowMatrix coords_;
  std::vector<double> table_;
  std::vector<double> weights_;
  std::vector<int> dim_label_;
  double total_mass_ = 0.0;
};

enum class Axiom {
  kNonFinite,
  kNonzeroDiagonal,
  kNegativeDistance,
  kAsymmetric,
  kSeparation,  // dist(i,j) == 0 for i != j
  kTriangle,
  kNegativeWeight,
  kZeroTotalMass,
};

std::string to_string(Axiom a);

struct Violation {
  Axiom axiom;
  std::vector<Index> witness;  // first offending indices found
  double magnitude = 0.0;      // size of the first violation
  std::size_t count = 0;       // number of offending checks
};

struct ValidationReport {
  std::vector<Violation> violations;
  std::size_t pairs_checked = 0;
  std::size_t triples_checked = 0;
  bool exhaustive_triples = false;

  bool ok() const { return violations.empty(); }
  const Violation* find(Axiom a) const;
};

// Pairs are scanned exhaustively for N <= 4096 and sampled otherwise; triples
// are exhaustive when N^3 <= triple_samples and sampled otherwise.
ValidationReport validate_space(const Space& space, std::size_t triple_samples,
                                std::uint64_t seed = 0);

// Open ball {y : dist(x,y) < r}.
PointSet ball(const Space& space, Index x, double r);
double measure(const Space& space, const PointSet& e);
double density(const Space& space, const PointSet& e, Index x, double r);
PointSet density_one_points(const Space& space, const PointSet& e, std::span<const double> scales,
                            double eta);
// Max of m(B_2r(x)) / m(B_r(x)) over the centers (all points by default) and radii.
double doubling_constant(const Space& space, std::span<const double> radii,
                         const std::optional<PointSet>& centers = std::nullopt);
double ball_average(const Space& space, std::span<const double> f, Index x, double r);
// Median nearest-neighbour distance; 0 for fewer than two points.
double sampling_resolution(const Space& space);
// dist(y, E) for every point y (0 on E). Throws on empty E.
std::vector<double> distance_to_set(const Space& space, const PointSet& e);
// max over y in B_r(x) \ {x} of dist(y, E) / dist(y, x); 0 if the ball is {x}.
double density_point_gap(const Space& space, const PointSet& e, Index x, double r);

}  // namespace ght
