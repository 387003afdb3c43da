// SPDX-License-Identifier: Apache-2.0
#include "ghtangent/chart.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include "ghtangent/kdtree.hpp"

namespace ght {

void Chart::check() const {
  if (k < 1) throw std::invalid_argument("Chart: k must be >= 1");
  if (static_cast<std::size_t>(phi.rows()) != domain.size())
    throw std::invalid_argument("Chart: phi rows differ from domain size");
  if (phi.cols() != k) throw std::invalid_argument("Chart: phi columns differ from k");
  if (!(eps >= 0.0) || !(comp >= 1.0)) throw std::invalid_argument("Chart: need eps >= 0 and comp >= 1");
}

Eigen::RowVectorXd Chart::coords(Index x) const {
  const auto pos = domain.position(x);
  if (!pos) throw std::out_of_range("Chart: point outside the domain");
  return phi.row(static_cast<Eigen::Index>(*pos));
}

RowMatrix Chart::rows(const PointSet& sub) const {
  RowMatrix out(static_cast<Eigen::Index>(sub.size()), k);
  for (std::size_t i = 0; i < sub.size(); ++i) {
    const auto pos = domain.position(sub[i]);
    if (!pos) throw std::out_of_range("Chart: subset leaves the domain");
    out.row(static_cast<Eigen::Index>(i)) = phi.row(static_cast<Eigen::Index>(*pos));
  }
  return out;
}

Chart Chart::restrict_to(const PointSet& sub) const {
  Chart c{k, sub, rows(sub), eps, comp};
  return c;
}

Chart compose(const Matrix& t, const Chart& chart) {
  if (t.rows() != chart.k || t.cols() != chart.k) throw std::invalid_argument("compose: dimension mismatch");
  Chart c = chart;
  c.phi = chart.phi * t.transpose();
  return c;
}

std::vector<std::ptrdiff_t> Atlas::owners(std::size_t n_points) const {
  std::vector<std::ptrdiff_t> own(n_points, -1);
  for (std::size_t c = 0; c < charts.size(); ++c)
    for (Index x : charts[c].domain) {
      if (x >= n_points) throw std::out_of_range("Atlas: chart domain outside the space");
      if (own[x] >= 0) throw std::invalid_argument("Atlas: overlapping chart domains at point " + std::to_string(x));
      own[x] = static_cast<std::ptrdiff_t>(c);
    }
  return own;
}

PointSet Atlas::covered() const {
  PointSet all;
  for (const auto& c : charts) all = set_union(all, c.domain);
  return all;
}

BiLipFactors measure_bilip(const Space& space, const Chart& chart) {
  chart.check();
  space.check(chart.domain);
  BiLipFactors f;
  const auto& d = chart.domain;
  for (std::size_t i = 0; i < d.size(); ++i)
    for (std::size_t j = i + 1; j < d.size(); ++j) {
      const double dx = space.dist(d[i], d[j]);
      const double dp = (chart.phi.row(static_cast<Eigen::Index>(i)) - chart.phi.row(static_cast<Eigen::Index>(j))).norm();
      if (!(dp > 0.0))
        throw NonInjectiveChartError("chart coordinates coincide at points " + std::to_string(d[i]) + " and " +
                                     std::to_string(d[j]));
      if (!(dx > 0.0)) throw InvalidSpaceError("zero distance between distinct chart points");
      f.forward = std::max(f.forward, dp / dx);
      f.inverse = std::max(f.inverse, dx / dp);
    }
  return f;
}

double unit_ball_volume(int k) {
  return std::pow(std::numbers::pi, 0.5 * k) / std::tgamma(0.5 * k + 1.0);
}

std::vector<double> pushforward_density(const Space& space, const Chart& chart, double s) {
  chart.check();
  space.check(chart.domain);
  if (!(s > 0.0)) throw std::invalid_argument("pushforward_density: probe radius must be positive");
  const KdTree tree(chart.phi);
  const double vol = unit_ball_volume(chart.k) * std::pow(s, chart.k);
  std::vector<double> rho(chart.size());
  std::vector<std::size_t> nb;
  for (std::size_t i = 0; i < chart.size(); ++i) {
    nb.clear();
    tree.radius(chart.phi.row(static_cast<Eigen::Index>(i)).data(), s, nb);
    double m = 0.0;
    for (std::size_t j : nb) m += space.weight(chart.domain[j]);
    rho[i] = m / vol;
  }
  return rho;
}

ChartReport validate_chart(const Space& space, const Chart& chart, double probe_radius,
                           const ChartCheckOptions& options) {
  if (chart.size() < 2) throw std::invalid_argument("validate_chart: need at least two points");
  ChartReport rep;
  rep.bilip = measure_bilip(space, chart);
  rep.eps_ok = rep.bilip.factor() <= (1.0 + chart.eps) * (1.0 + 1e-12);
  rep.rho = pushforward_density(space, chart, probe_radius);
  rep.rho_min = *std::min_element(rep.rho.begin(), rep.rho.end());
  rep.rho_max = *std::max_element(rep.rho.begin(), rep.rho.end());
  const double lo = 1.0 / (chart.comp * options.density_slack);
  const double hi = chart.comp * options.density_slack;
  double total = 0.0;
  for (std::size_t i = 0; i < chart.size(); ++i) {
    const double w = space.weight(chart.domain[i]);
    total += w;
    if (rep.rho[i] < lo || rep.rho[i] > hi) rep.compression_violation_mass += w;
  }
  rep.compression_ok = rep.compression_violation_mass <= options.exceptional_mass * total;
  return rep;
}

std::vector<int> density_levels(const Space& space, const Chart& chart, double probe_radius) {
  const auto rho = pushforward_density(space, chart, probe_radius);
  // Probe balls are truncated near the edge of phi(U); the neighbourhood max
  // lets those points inherit the interior value.
  const KdTree tree(chart.phi);
  std::vector<int> lv(rho.size(), std::numeric_limits<int>::min());
  std::vector<std::size_t> nb;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    nb.clear();
    tree.radius(chart.phi.row(static_cast<Eigen::Index>(i)).data(), 2.0 * probe_radius, nb);
    double best = rho[i];
    for (std::size_t j : nb) best = std::max(best, rho[j]);
    if (best > 0.0) lv[i] = static_cast<int>(std::lround(std::log2(best)));
  }
  return lv;
}

std::vector<Chart> split_by_density(const Space& space, const Chart& chart, double probe_radius) {
  auto lv = density_levels(space, chart, probe_radius);
  int lowest = std::numeric_limits<int>::max();
  for (int l : lv)
    if (l != std::numeric_limits<int>::min()) lowest = std::min(lowest, l);
  // Massless points have no density of their own; they join the lowest level.
  for (int& l : lv)
    if (l == std::numeric_limits<int>::min()) l = lowest == std::numeric_limits<int>::max() ? 0 : lowest;

  std::map<int, std::vector<Index>> groups;
  for (std::size_t i = 0; i < lv.size(); ++i) groups[lv[i]].push_back(chart.domain[i]);
  std::vector<Chart> out;
  for (auto& [j, pts] : groups) {
    Chart c = chart.restrict_to(PointSet::from_sorted(std::move(pts)));
    c.comp = std::sqrt(2.0) * std::max(std::ldexp(1.0, j), std::ldexp(1.0, -j));
    out.push_back(std::move(c));
  }
  return out;
}

Refinement build_refinement(const Space& space, const Atlas& coarse, const Atlas& fine, double mass_tolerance) {
  const auto own = coarse.owners(space.size());
  Refinement r;
  r.fine.level = fine.level;
  r.fine.eps = fine.eps;
  r.fine.delta = fine.delta;
  std::map<int, double> cand_mass, lost_mass;
  std::vector<Index> uncovered;

  for (std::size_t f = 0; f < fine.charts.size(); ++f) {
    const Chart& c = fine.charts[f];
    c.check();
    std::map<std::size_t, std::vector<Index>> pieces;
    for (Index x : c.domain) {
      cand_mass[c.k] += space.weight(x);
      const auto o = own[x];
      if (o < 0 || coarse.charts[static_cast<std::size_t>(o)].k != c.k) {
        uncovered.push_back(x);
        lost_mass[c.k] += space.weight(x);
        continue;
      }
      pieces[static_cast<std::size_t>(o)].push_back(x);
    }
    SplitRecord rec{f, {}};
    for (auto& [parent, pts] : pieces) {
      rec.children.push_back(r.fine.charts.size());
      r.fine.charts.push_back(c.restrict_to(PointSet::from_sorted(std::move(pts))));
      r.tree.parent.push_back(parent);
      r.origin.push_back(f);
    }
    if (rec.children.size() > 1) r.tree.splits.push_back(std::move(rec));
  }
  for (const auto& [k, lost] : lost_mass)
    if (lost > mass_tolerance * cand_mass[k])
      throw RefinementError("build_refinement: uncovered mass " + std::to_string(lost) + " in dimension " +
                            std::to_string(k) + " exceeds tolerance");
  r.uncovered = PointSet::from_indices(std::move(uncovered));
  return r;
}

}  // namespace ght
