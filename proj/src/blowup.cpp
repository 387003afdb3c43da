// SPDX-License-Identifier: Apache-2.0
#include "ghtangent/blowup.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "ghtangent/kdtree.hpp"

namespace ght {

void BlowupConfig::check() const {
  if (radii.empty()) throw std::invalid_argument("BlowupConfig: empty scale sequence");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0)) throw std::invalid_argument("BlowupConfig: scales must be positive");
    if (i > 0 && !(radii[i] < radii[i - 1])) throw std::invalid_argument("BlowupConfig: scales must strictly decrease");
  }
  if (!(tolerance > 0.0) || !(tolerance < window)) throw std::invalid_argument("BlowupConfig: need 0 < eps < R");
}

Index project_to_set(const Space& space, const PointSet& u, Index x) {
  space.check_index(x);
  space.check(u);
  if (u.empty()) throw std::invalid_argument("project_to_set: empty set");
  if (u.contains(x)) return x;
  double du = std::numeric_limits<double>::infinity();
  for (Index p : u) du = std::min(du, space.dist(x, p));
  for (Index p : u)
    if (space.dist(x, p) <= 2.0 * du) return p;
  return u[0];  // unreachable: the minimiser satisfies the bound
}

namespace {

int fallback_dim(const Space& space, Index x) { return space.has_dim_label() ? space.dim_label(x) : 0; }

Vector chart_blowup(const Space& space, const Chart& c, Index x, Index y, double r) {
  const Index p = project_to_set(space, c.domain, y);
  return ((c.coords(p) - c.coords(x)) / r).transpose();
}

}  // namespace

Vector blowup_map(const Space& space, const Atlas& atlas, Index x, Index y, double r) {
  space.check_index(x);
  space.check_index(y);
  if (!(r > 0.0)) throw std::invalid_argument("blowup_map: scale must be positive");
  for (const auto& c : atlas.charts)
    if (c.domain.contains(x)) return chart_blowup(space, c, x, y, r);
  return Vector::Zero(fallback_dim(space, x));
}

RowMatrix ball_grid(int k, double radius, double step) {
  if (k < 1 || !(radius > 0.0) || !(step > 0.0)) throw std::invalid_argument("ball_grid: bad parameters");
  std::vector<double> pts;
  if (k <= 3) {
    const int m = static_cast<int>(std::floor(radius / step));
    std::vector<int> idx(static_cast<std::size_t>(k), -m);
    while (true) {
      double n2 = 0.0;
      for (int i : idx) n2 += (i * step) * (i * step);
      if (std::sqrt(n2) < radius)
        for (int i : idx) pts.push_back(i * step);
      int d = 0;
      while (d < k && ++idx[static_cast<std::size_t>(d)] > m) idx[static_cast<std::size_t>(d++)] = -m;
      if (d == k) break;
    }
  } else {
    static constexpr int primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};
    if (k > 16) throw std::invalid_argument("ball_grid: dimension above 16 not supported");
    const double vol = std::pow(std::numbers::pi, 0.5 * k) / std::tgamma(0.5 * k + 1.0);
    const auto count = static_cast<std::size_t>(std::ceil(vol * std::pow(radius / step, k)));
    std::size_t got = 0;
    for (std::size_t i = 1; got < count && i < 100 * count + 100; ++i) {
      std::vector<double> p(static_cast<std::size_t>(k));
      double n2 = 0.0;
      for (int d = 0; d < k; ++d) {
        double f = 1.0, h = 0.0;
        for (std::size_t j = i; j > 0; j /= static_cast<std::size_t>(primes[d])) {
          f /= primes[d];
          h += f * static_cast<double>(j % static_cast<std::size_t>(primes[d]));
        }
        p[static_cast<std::size_t>(d)] = radius * (2.0 * h - 1.0);
        n2 += p[static_cast<std::size_t>(d)] * p[static_cast<std::size_t>(d)];
      }
      if (std::sqrt(n2) < radius) {
        pts.insert(pts.end(), p.begin(), p.end());
        ++got;
      }
    }
  }
  RowMatrix out(static_cast<Eigen::Index>(pts.size() / static_cast<std::size_t>(k)), k);
  std::copy(pts.begin(), pts.end(), out.data());
  return out;
}

DefectRecord quasi_isometry_defect(const Space& space, const Atlas& atlas, const BlowupConfig& cfg, std::size_t n,
                                   std::size_t pair_budget, double grid_step, std::uint64_t seed) {
  cfg.check();
  if (n >= cfg.radii.size()) throw std::out_of_range("quasi_isometry_defect: level beyond the scale sequence");
  space.check_index(cfg.base);
  DefectRecord rec;
  rec.n = n;
  rec.r = cfg.radii[n];
  const double r = rec.r;
  const Index x = cfg.base;
  const PointSet b = ball(space, x, r * cfg.window);
  rec.ball_points = b.size();
  if (b.size() < 2) {
    rec.empty_ball = true;
    rec.distortion = rec.coverage_gap = std::numeric_limits<double>::quiet_NaN();
    return rec;
  }

  const Chart* chart = nullptr;
  for (const auto& c : atlas.charts)
    if (c.domain.contains(x)) chart = &c;
  rec.covered = chart != nullptr;
  const int k = chart ? chart->k : fallback_dim(space, x);

  RowMatrix phi(static_cast<Eigen::Index>(b.size()), std::max(k, 1));
  phi.setZero();
  if (chart) {
    const Eigen::RowVectorXd origin = chart->coords(x);
    for (std::size_t i = 0; i < b.size(); ++i) {
      const Index p = project_to_set(space, chart->domain, b[i]);
      rec.eps_bar = std::max(rec.eps_bar, space.dist(b[i], p) / (2.0 * r * cfg.window));
      phi.row(static_cast<Eigen::Index>(i)) = (chart->coords(p) - origin) / r;
    }
  }

  auto pair_defect = [&](std::size_t i, std::size_t j) {
    const double img = (phi.row(static_cast<Eigen::Index>(i)) - phi.row(static_cast<Eigen::Index>(j))).norm();
    return std::abs(img - space.dist(b[i], b[j]) / r);
  };
  const std::size_t m = b.size();
  const std::size_t total = m * (m - 1) / 2;
  if (m <= 256 || total <= pair_budget) {
    rec.exhaustive = true;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i + 1; j < m; ++j) rec.distortion = std::max(rec.distortion, pair_defect(i, j));
    rec.pairs_used = total;
  } else {
    std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ULL * (n + 1)));
    std::uniform_int_distribution<std::size_t> pick(0, m - 1);
    for (std::size_t s = 0; s < pair_budget; ++s) {
      const std::size_t i = pick(rng), j = pick(rng);
      if (i != j) rec.distortion = std::max(rec.distortion, pair_defect(i, j));
    }
    rec.pairs_used = pair_budget;
  }

  if (k == 0) {
    rec.coverage_gap = std::numeric_limits<double>::quiet_NaN();
    return rec;
  }
  const RowMatrix grid = ball_grid(k, cfg.window - cfg.tolerance, grid_step);
  rec.grid_points = static_cast<std::size_t>(grid.rows());
  const KdTree tree(phi);
  for (Eigen::Index g = 0; g < grid.rows(); ++g) {
    double d = 0.0;
    tree.nearest(grid.row(g).data(), &d);
    rec.coverage_gap = std::max(rec.coverage_gap, d);
  }
  return rec;
}

std::vector<DefectRecord> blowup_sweep(const Space& space, std::span<const Atlas> atlases, const BlowupConfig& cfg,
                                       std::size_t pair_budget, double grid_step, std::uint64_t seed) {
  if (atlases.empty()) throw std::invalid_argument("blowup_sweep: no atlases");
  std::vector<DefectRecord> out;
  for (std::size_t n = 0; n < cfg.radii.size(); ++n)
    out.push_back(quasi_isometry_defect(space, atlases[std::min(n, atlases.size() - 1)], cfg, n, pair_budget,
                                        grid_step, seed));
  return out;
}

std::optional<std::size_t> first_converged_level(std::span<const DefectRecord> records, double eps) {
  std::optional<std::size_t> n0;
  for (std::size_t i = records.size(); i-- > 0;) {
    const auto& r = records[i];
    if (!(r.distortion <= eps) || !(r.coverage_gap <= eps)) break;
    n0 = r.n;
  }
  return n0;
}

double distortion_bound(double window, double eps_n, double eps_bar) {
  return 2.0 * window * std::max(2.0 * (1.0 + eps_n) * eps_bar + eps_n, (2.0 * eps_bar + eps_n) / (1.0 + eps_n));
}

RescaledBiLip rescaled_chart_bilip(const Space& space, const Chart& chart, double r, std::size_t pairs,
                                   std::uint64_t seed, bool base_slices) {
  chart.check();
  space.check(chart.domain);
  if (!(r > 0.0)) throw std::invalid_argument("rescaled_chart_bilip: radius must be positive");
  if (chart.size() < 2) throw std::invalid_argument("rescaled_chart_bilip: need at least two points");
  RescaledBiLip out;
  out.r = r;
  const double lip = (1.0 + chart.eps) / r;
  out.closed_form = std::sqrt(1.0 + lip * lip);
  const double l2 = lip * lip;
  out.sharp_forward = std::sqrt(0.5 * (1.0 + 2.0 * l2 + std::sqrt(1.0 + 4.0 * l2 * l2)));

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, chart.size() - 1);
  const auto& u = chart.domain;
  for (std::size_t s = 0; s < pairs; ++s) {
    const std::size_t a = pick(rng), b = pick(rng), c = pick(rng);
    const std::size_t d = base_slices ? b : pick(rng);
    const double d1 = space.dist(u[a], u[c]);
    const double d2 = space.dist(u[b], u[d]);
    const double din = std::hypot(d1, d2);
    if (!(din > 0.0)) continue;
    const auto row = [&](std::size_t i) { return chart.phi.row(static_cast<Eigen::Index>(i)); };
    const double fib = ((row(b) - row(a)) - (row(d) - row(c))).norm() / r;
    const double dout = std::hypot(d1, fib);
    out.forward = std::max(out.forward, dout / din);
    out.inverse = std::max(out.inverse, din / dout);
    ++out.pairs;
  }
  return out;
}

RescaledCoverage rescaled_chart_coverage(const Space& space, const Chart& chart, std::span<const double> radii,
                                         double m_window, const CoverageOptions& options) {
  chart.check();
  space.check(chart.domain);
  if (radii.empty()) throw std::invalid_argument("rescaled_chart_coverage: empty radius list");
  for (std::size_t j = 0; j < radii.size(); ++j)
    if (!(radii[j] > 0.0) || (j > 0 && !(radii[j] < radii[j - 1])))
      throw std::invalid_argument("rescaled_chart_coverage: radii must be positive and strictly decreasing");
  RescaledCoverage out;
  out.radii.assign(radii.begin(), radii.end());
  out.tolerance = options.tolerance > 0.0 ? options.tolerance : options.grid_step;
  const RowMatrix grid = ball_grid(chart.k, m_window, options.grid_step);
  out.grid_points = static_cast<std::size_t>(grid.rows());

  std::vector<std::size_t> base(chart.size());
  for (std::size_t i = 0; i < base.size(); ++i) base[i] = i;
  if (base.size() > options.max_base_points) {
    std::mt19937_64 rng(options.seed);
    std::shuffle(base.begin(), base.end(), rng);
    base.resize(options.max_base_points);
    std::sort(base.begin(), base.end());
  }
  out.base_points = base.size();

  const KdTree tree(chart.phi);
  const std::size_t nr = radii.size();
  std::vector<double> cum(nr, 0.0), single(nr, 0.0);
  double mass = 0.0;
  Eigen::RowVectorXd q(chart.k);
  std::vector<char> hit(nr);
  for (std::size_t bi : base) {
    const double w = space.weight(chart.domain[bi]);
    mass += w;
    const Eigen::RowVectorXd origin = chart.phi.row(static_cast<Eigen::Index>(bi));
    std::vector<std::size_t> miss_cum(nr, 0), miss_single(nr, 0);
    for (Eigen::Index g = 0; g < grid.rows(); ++g) {
      for (std::size_t j = 0; j < nr; ++j) {
        q = origin + radii[j] * grid.row(g);
        hit[j] = tree.any_within(q.data(), radii[j] * out.tolerance);
      }
      bool any = false;
      for (std::size_t j = 0; j < nr; ++j) {
        any = any || hit[j];
        if (!any) ++miss_cum[j];
        if (!hit[j]) ++miss_single[j];
      }
    }
    for (std::size_t j = 0; j < nr; ++j) {
      cum[j] += w * static_cast<double>(miss_cum[j]) / static_cast<double>(grid.rows());
      single[j] += w * static_cast<double>(miss_single[j]) / static_cast<double>(grid.rows());
    }
  }
  for (std::size_t j = 0; j < nr; ++j) {
    out.residual.push_back(mass > 0.0 ? cum[j] / mass : 0.0);
    out.single.push_back(mass > 0.0 ? single[j] / mass : 0.0);
  }
  return out;
}

}  // namespace ght
