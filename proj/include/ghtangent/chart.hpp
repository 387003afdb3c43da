// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "ghtangent/common.hpp"
#include "ghtangent/point_set.hpp"
#include "ghtangent/space.hpp"

namespace ght {

// Coordinates phi.row(i) belong to point domain[i].
struct Chart {
  int k = 0;
  PointSet domain;
  RowMatrix phi;
  double eps = 0.0;   // declared: the chart is (1 + eps)-biLipschitz
  double comp = 1.0;  // declared compression constant

  std::size_t size() const { return domain.size(); }
  // Throws std::invalid_argument on shape errors.
  void check() const;
  Eigen::RowVectorXd coords(Index x) const;
  // Rows of phi for the given subset of the domain.
  RowMatrix rows(const PointSet& sub) const;
  Chart restrict_to(const PointSet& sub) const;
};

// T ∘ chart: coordinates multiplied by the k x k matrix t.
Chart compose(const Matrix& t, const Chart& chart);

struct Atlas {
  int level = 0;
  double eps = 1.0;
  double delta = 1.0;
  std::vector<Chart> charts;

  // Chart index owning each point, -1 if none. Throws on overlapping domains.
  std::vector<std::ptrdiff_t> owners(std::size_t n_points) const;
  PointSet covered() const;
};

struct BiLipFactors {
  double forward = 0.0;  // max |Δphi| / d
  double inverse = 0.0;  // max d / |Δphi|
  double factor() const { return std::max(forward, inverse); }
};

// Exhaustive pair scan. Throws NonInjectiveChartError on coincident coordinates.
BiLipFactors measure_bilip(const Space& space, const Chart& chart);

double unit_ball_volume(int k);
// rho(x) = m(U ∩ phi^-1(B_s(phi(x)))) / (omega_k s^k), one entry per domain point.
std::vector<double> pushforward_density(const Space& space, const Chart& chart, double s);

struct ChartCheckOptions {
  double exceptional_mass = 0.05;  // fraction of m(U) allowed outside the density band
  double density_slack = 2.0;      // band is [1/(C slack), C slack]; a half ball at the boundary still passes
};

struct ChartReport {
  BiLipFactors bilip;
  bool eps_ok = false;
  std::vector<double> rho;
  double rho_min = 0.0;
  double rho_max = 0.0;
  double compression_violation_mass = 0.0;
  bool compression_ok = false;
  bool ok() const { return eps_ok && compression_ok; }
};

ChartReport validate_chart(const Space& space, const Chart& chart, double probe_radius,
                           const ChartCheckOptions& options = {});

// round(log2 rho*) per domain point, rho* the max of rho over the chart-image
// ball of radius 2 probe_radius: level j covers rho* in [2^(j-1/2), 2^(j+1/2)).
std::vector<int> density_levels(const Space& space, const Chart& chart, double probe_radius);
// Pieces ordered by level; piece j carries comp = sqrt(2) max(2^j, 2^-j).
std::vector<Chart> split_by_density(const Space& space, const Chart& chart, double probe_radius);

struct SplitRecord {
  std::size_t fine_chart;             // index in the candidate atlas
  std::vector<std::size_t> children;  // indices in the refined atlas
};

// parent[c] is the coarse chart containing refined chart c.
struct RefinementTree {
  std::vector<std::size_t> parent;
  std::vector<SplitRecord> splits;
};

struct Refinement {
  Atlas fine;  // candidate charts split along coarse domains
  RefinementTree tree;
  PointSet uncovered;  // candidate points outside every coarse chart of their dimension
  std::vector<std::size_t> origin;  // candidate chart index of each refined chart
};

// Throws RefinementError when the uncovered mass of some dimension exceeds
// mass_tolerance times the candidate mass of that dimension.
Refinement build_refinement(const Space& space, const Atlas& coarse, const Atlas& fine,
                            double mass_tolerance = 0.05);

}  // namespace ght
