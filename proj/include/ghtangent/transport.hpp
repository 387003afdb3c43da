// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "ghtangent/chart.hpp"
#include "ghtangent/tangent.hpp"

namespace ght {

// Vectors (or covectors) in chart coordinates: rows[i] belongs to domain[i].
template <class Tag>
struct ChartField {
  PointSet domain;
  RowMatrix rows;
};
using ChartVectors = ChartField<TangentTag>;
using ChartCovectors = ChartField<CotangentTag>;

// A[i] = d(to ∘ from^-1) at from.phi(shared[i]), fitted on the shared domain.
struct ChartTransition {
  PointSet shared;
  std::vector<Matrix> a;
};
ChartTransition chart_transition(const Chart& from, const Chart& to, double h);

// w(x) = A(x) v(x) on the shared domain. v must cover the shared domain.
ChartVectors push_section(const Chart& from, const Chart& to, const ChartVectors& v, double h);
// (phi^* omega)(x) = omega(x) A(x) on the shared domain.
ChartCovectors pull_form(const Chart& from, const Chart& to, const ChartCovectors& omega, double h);
// |omega(A v) - (omega A)(v)| per shared point.
std::vector<double> duality_defect(const Chart& from, const Chart& to, const ChartCovectors& omega,
                                   const ChartVectors& v, double h);
// |A02 v - A12 A01 v| per point of the common domain (returned in `domain`).
struct ChainDefect {
  PointSet domain;
  std::vector<double> defect;
};
ChainDefect chain_defect(const Chart& c0, const Chart& c1, const Chart& c2, const ChartVectors& v, double h);

struct TransportOptions {
  double fit_radius = 0.0;  // <= 0: default_fit_radius of each parent image
  unsigned threads = 1;
  double condition_slack = 1e-9;  // relative allowance over the biLipschitz bound
};

// Cached per-point differentials of an aligned tower. Level m >= 1 stores
// A_m(x), the differential of (level-m chart) ∘ (level-(m-1) chart)^-1, and
// the composites D_m = A_m ... A_1 with their inverses. Sections at level 0
// are in level-0 chart coordinates.
class TransportPlan {
 public:
  // trees[m-1] links level m to level m-1.
  static TransportPlan build(const Space& space, std::vector<Atlas> levels, std::vector<RefinementTree> trees,
                             const TransportOptions& options = {});

  std::size_t levels() const { return levels_.size(); }
  const Atlas& atlas(std::size_t level) const { return levels_.at(level); }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<int>& fiber_dims() const { return dims_; }
  // Covered at every level up to and including `level`.
  bool covered(std::size_t level, Index x) const { return comp_.at(level)[x].size() != 0; }
  const Matrix& step(std::size_t level, Index x) const;
  const Matrix& composite(std::size_t level, Index x) const;
  const Matrix& composite_inverse(std::size_t level, Index x) const;
  // Product over m <= level of ((1+eps_parent)(1+eps_child))^2 at x.
  double condition_bound(std::size_t level, Index x) const;
  double condition(std::size_t level, Index x) const { return cond_.at(level)[x]; }
  PointSet exceptional(std::size_t level) const;
  double exceptional_mass(std::size_t level) const;
  // Points where cond(D_level) exceeds its bound.
  std::size_t conditioning_violations(std::size_t level) const;

 private:
  TransportPlan() = default;
  void require(std::size_t level, Index x) const;

  std::vector<Atlas> levels_;
  std::vector<double> weights_;
  std::vector<int> dims_;
  double slack_ = 1e-9;
  std::vector<std::vector<Matrix>> step_, comp_, inv_;
  std::vector<std::vector<double>> bound_, cond_;
};

// I_n: D_n(x) v0(x); exceptional points map to 0.
Section iso_step(const TransportPlan& plan, const Section& v0, std::size_t n);
// J_n: D_n(x)^-1 w(x). Throws ConditioningError where cond(D_n) exceeds its bound.
Section iso_inverse(const TransportPlan& plan, const Section& w, std::size_t n);
// max over non-exceptional x of |J_n I_n v0 - v0|(x).
double roundtrip_error(const TransportPlan& plan, const Section& v0, std::size_t n);

struct ContractionRow {
  std::size_t level = 0;     // m: compares I_{m+1} with I_m
  double bound = 0.0;        // 2^-m
  double empirical = 0.0;    // sup over probes of ||(I_{m+1} - I_m) v|| / ||v||
  double pointwise = 0.0;    // sup_x ||D_{m+1}(x) - D_m(x)||
  double chain_bound = 0.0;  // sup_x ||A_{m+1}(x) - Id|| ||D_m(x)||
  double exceptional_mass = 0.0;
  std::size_t probes_used = 0;
};
// Rows m = 0 .. n-1; zero probes are skipped.
std::vector<ContractionRow> contraction_profile(const TransportPlan& plan, std::span<const Section> probes,
                                                std::size_t n);

struct NormDeviation {
  std::vector<double> deviation;  // NaN at exceptional points
  double max = 0.0;
};
// | |I_n v0|(x) - |v0|(x) | / max(|v0|(x), 1e-12 max_y |v0|(y)).
NormDeviation norm_preservation(const TransportPlan& plan, const Section& v0, std::size_t n);

}  // namespace ght
