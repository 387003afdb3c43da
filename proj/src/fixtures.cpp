// SPDX-License-Identifier: Apache-2.0
#include "ghtangent/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>

#include "ghtangent/linalg.hpp"

namespace ght {

std::string to_string(FixtureKind kind) {
  switch (kind) {
    case FixtureKind::kEuclideanPatch: return "euclidean_patch";
    case FixtureKind::kLipschitzGraph: return "lipschitz_graph";
    case FixtureKind::kRotatedPatches: return "rotated_patches";
    case FixtureKind::kMixedDimension: return "mixed_dimension";
    case FixtureKind::kPiecewiseRotation: return "piecewise_rotation";
  }
  return "unknown";
}

FixtureKind parse_fixture_kind(const std::string& name) {
  for (auto k : {FixtureKind::kEuclideanPatch, FixtureKind::kLipschitzGraph, FixtureKind::kRotatedPatches,
                 FixtureKind::kMixedDimension, FixtureKind::kPiecewiseRotation})
    if (to_string(k) == name) return k;
  throw std::invalid_argument("unknown fixture kind '" + name + "'");
}

std::string to_string(GraphTower t) { return t == GraphTower::kShear ? "shear" : "dilation"; }

GraphTower parse_graph_tower(const std::string& name) {
  if (name == "shear") return GraphTower::kShear;
  if (name == "dilation") return GraphTower::kDilation;
  throw std::invalid_argument("unknown graph tower '" + name + "'");
}

void FixtureSpec::check() const {
  if (n < 4) throw std::invalid_argument("FixtureSpec: need N >= 4");
  if (kind != FixtureKind::kMixedDimension && (k < 1 || k > 6))
    throw std::invalid_argument("FixtureSpec: k must lie in [1, 6]");
  if ((kind == FixtureKind::kRotatedPatches || kind == FixtureKind::kPiecewiseRotation) && k < 2)
    throw std::invalid_argument("FixtureSpec: rotation fixtures need k >= 2");
  if (!std::isfinite(lip_g) || lip_g < 0.0) throw std::invalid_argument("FixtureSpec: lip_g must be finite and >= 0");
  if (!angles.empty() && angles.size() != 2 &&
      (kind == FixtureKind::kRotatedPatches || kind == FixtureKind::kPiecewiseRotation))
    throw std::invalid_argument("FixtureSpec: rotation fixtures take exactly two angles");
  for (double a : angles)
    if (!std::isfinite(a)) throw std::invalid_argument("FixtureSpec: non-finite angle");
}

namespace {

constexpr double kDeg20 = 20.0 * std::numbers::pi / 180.0;

// Parameters in [0,1]^k, either uniform samples or a centred lattice.
RowMatrix sample_box(int k, std::size_t n, bool lattice, std::mt19937_64& rng) {
  if (lattice) {
    auto m = static_cast<std::size_t>(std::llround(std::pow(static_cast<double>(n), 1.0 / k)));
    m = std::max<std::size_t>(m, 2);
    std::size_t total = 1;
    for (int d = 0; d < k; ++d) total *= m;
    RowMatrix u(static_cast<Eigen::Index>(total), k);
    for (std::size_t i = 0; i < total; ++i) {
      std::size_t rest = i;
      for (int d = 0; d < k; ++d) {
        u(static_cast<Eigen::Index>(i), d) = (static_cast<double>(rest % m) + 0.5) / static_cast<double>(m);
        rest /= m;
      }
    }
    return u;
  }
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  RowMatrix u(static_cast<Eigen::Index>(n), k);
  for (Eigen::Index i = 0; i < u.rows(); ++i)
    for (int d = 0; d < k; ++d) u(i, d) = unif(rng);
  return u;
}

double graph_height(const Eigen::RowVectorXd& u, double lip) {
  return lip / std::sqrt(static_cast<double>(u.size())) * u.array().sin().sum();
}

double graph_factor(const FixtureSpec& s) {
  return s.kind == FixtureKind::kLipschitzGraph ? std::sqrt(1.0 + s.lip_g * s.lip_g) : 1.0;
}

std::vector<double> default_angles(const FixtureSpec& s) {
  if (!s.angles.empty()) return s.angles;
  if (s.kind == FixtureKind::kRotatedPatches) return {0.3, -0.5};
  if (s.kind == FixtureKind::kPiecewiseRotation) return {kDeg20, -kDeg20};
  return {};
}

Chart make_chart(int k, std::vector<Index> pts, const RowMatrix& coords, double eps, double comp) {
  Chart c;
  c.k = k;
  c.domain = PointSet::from_sorted(std::move(pts));
  c.phi.resize(static_cast<Eigen::Index>(c.domain.size()), k);
  for (std::size_t i = 0; i < c.domain.size(); ++i)
    c.phi.row(static_cast<Eigen::Index>(i)) = coords.row(static_cast<Eigen::Index>(c.domain[i])).head(k);
  c.eps = eps;
  c.comp = comp;
  return c;
}

}  // namespace

Fixture generate(const FixtureSpec& spec) {
  spec.check();
  std::mt19937_64 rng(spec.seed);
  const auto angles = default_angles(spec);
  GroundTruth truth;

  if (spec.kind == FixtureKind::kMixedDimension) {
    const std::size_t n1 = std::max<std::size_t>(spec.n / 3, 2);
    const RowMatrix seg = sample_box(1, n1, spec.lattice, rng);
    const RowMatrix sq = sample_box(2, spec.n - n1, spec.lattice, rng);
    const auto a = static_cast<std::size_t>(seg.rows()), b = static_cast<std::size_t>(sq.rows());
    RowMatrix coords = RowMatrix::Zero(static_cast<Eigen::Index>(a + b), 3);
    RowMatrix params = RowMatrix::Zero(coords.rows(), 2);
    std::vector<double> w(a + b);
    std::vector<int> dims(a + b);
    std::vector<Index> seg_pts, sq_pts;
    for (std::size_t i = 0; i < a; ++i) {
      const double t = seg(static_cast<Eigen::Index>(i), 0);
      coords.row(static_cast<Eigen::Index>(i)) << t, 0.5, 2.0;
      params(static_cast<Eigen::Index>(i), 0) = t;
      w[i] = 1.0 / static_cast<double>(a);
      dims[i] = 1;
      seg_pts.push_back(i);
    }
    for (std::size_t i = 0; i < b; ++i) {
      const auto r = static_cast<Eigen::Index>(a + i);
      coords.row(r) << sq(static_cast<Eigen::Index>(i), 0), sq(static_cast<Eigen::Index>(i), 1), 0.0;
      params.row(r) = sq.row(static_cast<Eigen::Index>(i));
      w[a + i] = 1.0 / static_cast<double>(b);
      dims[a + i] = 2;
      sq_pts.push_back(a + i);
    }
    Atlas atlas;
    atlas.charts.push_back(make_chart(1, std::move(seg_pts), params, 0.0, 1.0));
    atlas.charts.push_back(make_chart(2, std::move(sq_pts), params, 0.0, 1.0));
    truth.charts = {{1.0, "segment parameter t"}, {1.0, "square parameter u"}};
    truth.doubling_constant = 4.0;
    truth.description = "unit segment at height z=2 and unit square at z=0 in R^3";
    Space space = Space::euclidean(std::move(coords), std::move(w), dims);
    return Fixture{spec, std::move(space), std::move(atlas), std::move(truth), std::move(params), std::move(dims)};
  }

  const int k = spec.k;
  RowMatrix u = sample_box(k, spec.n, spec.lattice, rng);
  const auto n = static_cast<std::size_t>(u.rows());
  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  std::vector<int> dims(n, k);
  RowMatrix coords;
  Atlas atlas;
  std::vector<Index> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;

  switch (spec.kind) {
    case FixtureKind::kEuclideanPatch:
    case FixtureKind::kPiecewiseRotation:
      coords = u;
      atlas.charts.push_back(make_chart(k, all, u, 0.0, 1.0));
      truth.charts = {{1.0, "identity"}};
      truth.description = spec.kind == FixtureKind::kEuclideanPatch ? "flat unit cube"
                                                                     : "flat unit cube; candidate levels rotate per cell";
      break;
    case FixtureKind::kLipschitzGraph: {
      coords.resize(static_cast<Eigen::Index>(n), k + 1);
      for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        coords.row(r).head(k) = u.row(r);
        coords(r, k) = graph_height(u.row(r), spec.lip_g);
      }
      const double f = graph_factor(spec);
      atlas.charts.push_back(make_chart(k, all, u, f - 1.0, 1.0));
      truth.charts = {{f, "projection (u, g(u)) -> u"}};
      truth.description = "graph of g(u) = lip_g k^-1/2 sum sin(u_i) over the unit cube";
      break;
    }
    case FixtureKind::kRotatedPatches: {
      coords = u;
      std::vector<Index> left, right;
      for (std::size_t i = 0; i < n; ++i) (u(static_cast<Eigen::Index>(i), 0) < 0.5 ? left : right).push_back(i);
      for (int h = 0; h < 2; ++h) {
        const RowMatrix rotated = u * plane_rotation(k, angles[static_cast<std::size_t>(h)]).transpose();
        atlas.charts.push_back(make_chart(k, h == 0 ? left : right, rotated, 0.0, 1.0));
        truth.charts.push_back({1.0, "rotation by " + std::to_string(angles[static_cast<std::size_t>(h)]) + " rad"});
      }
      truth.description = "flat unit cube split at u_0 = 1/2 with rotated halves";
      break;
    }
    case FixtureKind::kMixedDimension: break;
  }
  truth.doubling_constant = std::ldexp(1.0, k);
  Space space = Space::euclidean(std::move(coords), std::move(w), dims);
  return Fixture{spec, std::move(space), std::move(atlas), std::move(truth), std::move(u), std::move(dims)};
}

namespace {

enum class Flavor { kIdentity, kRotatePlant, kPiecewise, kShear, kDilation };

Flavor flavor_for(const FixtureSpec& s, int k) {
  switch (s.kind) {
    case FixtureKind::kEuclideanPatch: return Flavor::kIdentity;
    case FixtureKind::kLipschitzGraph: return s.tower == GraphTower::kShear ? Flavor::kShear : Flavor::kDilation;
    case FixtureKind::kRotatedPatches: return Flavor::kRotatePlant;
    case FixtureKind::kPiecewiseRotation: return Flavor::kPiecewise;
    case FixtureKind::kMixedDimension: return k == 1 ? Flavor::kIdentity : Flavor::kRotatePlant;
  }
  return Flavor::kIdentity;
}

// Alternating bisection of [0,1]^k: cell id over `depth` halvings.
std::size_t cell_of(const Eigen::RowVectorXd& u, int k, std::size_t depth) {
  std::vector<double> lo(static_cast<std::size_t>(k), 0.0), hi(static_cast<std::size_t>(k), 1.0);
  std::size_t id = 0;
  for (std::size_t i = 0; i < depth; ++i) {
    const auto a = static_cast<std::size_t>(i % static_cast<std::size_t>(k));
    const double mid = 0.5 * (lo[a] + hi[a]);
    const bool upper = u(static_cast<Eigen::Index>(a)) >= mid;
    id = 2 * id + (upper ? 1 : 0);
    (upper ? lo[a] : hi[a]) = mid;
  }
  return id;
}

double shear_sigma_max(double a) { return 0.5 * (std::abs(a) + std::sqrt(a * a + 4.0)); }

}  // namespace

AtlasTower make_atlas_tower(const Fixture& fx, std::size_t n_levels, const TowerOptions& options) {
  const auto& spec = fx.spec;
  const std::size_t n = fx.space.size();
  const double proj = graph_factor(spec);
  const auto angles = default_angles(spec);
  const std::size_t d0 = spec.kind == FixtureKind::kRotatedPatches ? 1 : 0;

  AtlasTower tower;
  tower.aligned = spec.kind != FixtureKind::kPiecewiseRotation;
  tower.levels.push_back(fx.atlas);
  tower.planted_defects.push_back(std::vector<double>(fx.atlas.charts.size(), 0.0));

  // Per-point chart coordinates and true Jacobians d(phi)/du at the current level.
  std::vector<Matrix> jac(n);
  RowMatrix coords = RowMatrix::Zero(static_cast<Eigen::Index>(n), fx.params.cols());
  for (const auto& c : fx.atlas.charts)
    for (std::size_t i = 0; i < c.size(); ++i) {
      const Index x = c.domain[i];
      coords.row(static_cast<Eigen::Index>(x)).head(c.k) = c.phi.row(static_cast<Eigen::Index>(i));
      if (spec.kind == FixtureKind::kRotatedPatches) {
        const bool left = fx.params(static_cast<Eigen::Index>(x), 0) < 0.5;
        jac[x] = plane_rotation(c.k, angles[left ? 0 : 1]);
      } else {
        jac[x] = Matrix::Identity(c.k, c.k);
      }
    }

  std::vector<int> comps = fx.dims;
  std::sort(comps.begin(), comps.end());
  comps.erase(std::unique(comps.begin(), comps.end()), comps.end());

  for (std::size_t m = 1; m <= n_levels; ++m) {
    const double two_m = std::ldexp(1.0, -static_cast<int>(m));
    const std::size_t depth = std::min(std::max(m, d0), options.max_depth);
    const double theta = 2.0 * std::asin(0.5 * two_m);
    const Atlas& prev = tower.levels.back();
    const auto prev_owner = prev.owners(n);

    std::mt19937_64 rng(spec.seed * 0x100000001b3ULL + m);
    std::uniform_real_distribution<double> turn(-std::numbers::pi, std::numbers::pi);
    std::vector<double> cell_angle(std::size_t{1} << depth);
    for (std::size_t c = 0; c < cell_angle.size(); ++c)
      cell_angle[c] = (m == 1 && cell_angle.size() == angles.size()) ? angles[c] : turn(rng);

    std::vector<Matrix> next_jac(n);
    RowMatrix next = coords;
    Atlas atlas;
    atlas.level = static_cast<int>(m);
    atlas.eps = two_m;
    atlas.delta = two_m;
    std::vector<double> planted;
    RefinementTree tree;

    for (int k : comps) {
      const Flavor fl = flavor_for(spec, k);
      std::map<std::size_t, std::vector<Index>> cells;
      for (Index x = 0; x < n; ++x) {
        if (fx.dims[x] != k || prev_owner[x] < 0) continue;
        const Eigen::RowVectorXd u = fx.params.row(static_cast<Eigen::Index>(x)).head(k);
        const std::size_t cell = cell_of(u, k, depth);
        cells[cell].push_back(x);
        Matrix j;
        Eigen::RowVectorXd phi;
        const Eigen::RowVectorXd old = coords.row(static_cast<Eigen::Index>(x)).head(k);
        switch (fl) {
          case Flavor::kIdentity:
            j = jac[x];
            phi = old;
            break;
          case Flavor::kRotatePlant: {
            const Matrix r = plane_rotation(k, (cell % 2 == 0 ? 1.0 : -1.0) * theta);
            j = r * jac[x];
            phi = old * r.transpose();
            break;
          }
          case Flavor::kPiecewise: {
            const Matrix r = plane_rotation(k, cell_angle[cell]);
            j = r;
            phi = u * r.transpose();
            break;
          }
          case Flavor::kShear: {
            j = Matrix::Identity(k, k);
            phi = u;
            if (k == 1) {
              j(0, 0) += 0.5 * two_m * std::cos(u(0));
              phi(0) += 0.5 * two_m * std::sin(u(0));
            } else {
              j(k - 1, 0) += two_m * std::cos(u(0));
              phi(k - 1) += two_m * std::sin(u(0));
            }
            break;
          }
          case Flavor::kDilation: {
            const double s = 1.0 / (1.0 + two_m);
            j = s * Matrix::Identity(k, k);
            phi = s * u;
            break;
          }
        }
        next_jac[x] = j;
        next.row(static_cast<Eigen::Index>(x)).head(k) = phi;
      }

      double eps = proj - 1.0, comp = 1.0;
      if (fl == Flavor::kShear) {
        const double a = k == 1 ? 0.5 * two_m : two_m;
        const double smax = k == 1 ? 1.0 / (1.0 - a) : shear_sigma_max(a);
        eps = proj * smax - 1.0;
      } else if (fl == Flavor::kDilation) {
        const double s = 1.0 / (1.0 + two_m);
        eps = proj / s - 1.0;
        comp = std::pow(s, -k);
      }
      for (auto& [cell, pts] : cells) {
        double defect = 0.0;
        const Matrix id = Matrix::Identity(k, k);
        for (Index x : pts) defect = std::max(defect, op_norm(id - jac[x] * next_jac[x].inverse()));
        tree.parent.push_back(static_cast<std::size_t>(prev_owner[pts.front()]));
        planted.push_back(defect);
        atlas.charts.push_back(make_chart(k, std::move(pts), next, eps, comp));
      }
    }
    for (Index x = 0; x < n; ++x)
      if (next_jac[x].size() > 0) jac[x] = next_jac[x];
    coords = std::move(next);
    tower.levels.push_back(std::move(atlas));
    tower.trees.push_back(std::move(tree));
    tower.planted_defects.push_back(std::move(planted));
  }
  return tower;
}

}  // namespace ght
