// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <span>
#include <vector>

#include "ghtangent/chart.hpp"
#include "ghtangent/space.hpp"

namespace ght {

struct BlowupConfig {
  Index base = 0;
  std::vector<double> radii;  // r_n, strictly decreasing and positive
  double window = 2.0;        // R
  double tolerance = 0.2;     // eps, 0 < eps < R

  // Throws std::invalid_argument when an invariant fails.
  void check() const;
};

struct DefectRecord {
  std::size_t n = 0;
  double r = 0.0;
  double distortion = 0.0;
  double coverage_gap = 0.0;
  std::size_t pairs_used = 0;
  std::size_t grid_points = 0;
  std::size_t ball_points = 0;
  bool exhaustive = false;
  bool covered = true;       // base point lies in a chart of the level
  bool empty_ball = false;   // fewer than two points at scale r R; defects are NaN
  double eps_bar = 0.0;      // max_y d(y, P_U y) / (2 r R) over the ball
};

// x itself when x is in U, else the first u of U (in index order) with
// d(x, u) <= 2 d(x, U).
Index project_to_set(const Space& space, const PointSet& u, Index x);

// (phi(P_U(y)) - phi(x)) / r for the chart of `atlas` containing x; the zero
// vector of length dim_label(x) (or 0) when no chart contains x.
Vector blowup_map(const Space& space, const Atlas& atlas, Index x, Index y, double r);

// Lattice points of step `step` strictly inside B_radius(0) in R^k; for k >= 4
// Halton points in the same number as the lattice would have.
RowMatrix ball_grid(int k, double radius, double step);

// Pairs are enumerated exhaustively when the ball has <= 256 points or the
// pair count fits in pair_budget, and sampled (seeded) otherwise.
DefectRecord quasi_isometry_defect(const Space& space, const Atlas& atlas, const BlowupConfig& cfg, std::size_t n,
                                   std::size_t pair_budget, double grid_step, std::uint64_t seed = 0);

// One record per r_n, using atlases[min(n, size - 1)].
std::vector<DefectRecord> blowup_sweep(const Space& space, std::span<const Atlas> atlases, const BlowupConfig& cfg,
                                       std::size_t pair_budget, double grid_step, std::uint64_t seed = 0);

// First n such that every record from n on has both defects <= eps.
std::optional<std::size_t> first_converged_level(std::span<const DefectRecord> records, double eps);

// 2R max{2(1+eps_n) eps_bar + eps_n, (2 eps_bar + eps_n) / (1 + eps_n)}.
double distortion_bound(double window, double eps_n, double eps_bar);

struct RescaledBiLip {
  double r = 0.0;
  double forward = 0.0;
  double inverse = 0.0;
  double closed_form = 0.0;    // sqrt(1 + (1+eps)^2 / r^2)
  double sharp_forward = 0.0;  // exact sup of the forward bound |Δ| <= L (d1 + d2), L = (1+eps)/r
  std::size_t pairs = 0;
  double factor() const { return std::max(forward, inverse); }
};

// Measured biLipschitz factors of (xb, x) -> (xb, (phi(x) - phi(xb)) / r) on
// U x U with the product metric sqrt(d1^2 + d2^2) on both sides, over sampled
// pairs of pairs. `base_slices` restricts pairs to a shared second coordinate.
RescaledBiLip rescaled_chart_bilip(const Space& space, const Chart& chart, double r, std::size_t pairs,
                                   std::uint64_t seed = 0, bool base_slices = false);

struct CoverageOptions {
  double grid_step = 0.1;
  double tolerance = 0.0;  // in rescaled units; <= 0 selects grid_step
  std::size_t max_base_points = 2000;
  std::uint64_t seed = 0;
};

struct RescaledCoverage {
  std::vector<double> radii;
  std::vector<double> residual;  // mass fraction uncovered by radii[0..j]
  std::vector<double> single;    // mass fraction uncovered by radii[j] alone
  std::size_t grid_points = 0;
  std::size_t base_points = 0;
  double tolerance = 0.0;
};

// Fraction of (xb, v) in U x B_m(0) farther than the tolerance from every
// rescaled image (phi(U) - phi(xb)) / r_j.
RescaledCoverage rescaled_chart_coverage(const Space& space, const Chart& chart, std::span<const double> radii,
                                         double m_window, const CoverageOptions& options = {});

}  // namespace ght
