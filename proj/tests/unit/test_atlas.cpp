// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "ghtangent/align.hpp"
#include "ghtangent/chart.hpp"
#include "ghtangent/differential.hpp"
#include "ghtangent/fixtures.hpp"
#include "ghtangent/linalg.hpp"
#include "helpers.hpp"

using namespace ght;

namespace {

Chart identity_chart(const Space& s) {
  Chart c;
  c.k = static_cast<int>(s.coords().cols());
  c.domain = s.all();
  c.phi = s.coords();
  return c;
}

Fixture planar(std::size_t n, bool lattice = false, std::uint64_t seed = 1) {
  FixtureSpec spec;
  spec.n = n;
  spec.lattice = lattice;
  spec.seed = seed;
  return generate(spec);
}

PointSet where(const Fixture& fx, const std::function<bool(double, double)>& pred) {
  std::vector<Index> out;
  for (Index x = 0; x < fx.space.size(); ++x)
    if (pred(fx.params(static_cast<Eigen::Index>(x), 0), fx.params(static_cast<Eigen::Index>(x), 1))) out.push_back(x);
  return PointSet::from_sorted(out);
}

}  // namespace

TEST_CASE("differential fits") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  RowMatrix nb(60, 2);
  for (Eigen::Index i = 0; i < nb.rows(); ++i) nb.row(i) << u(rng), u(rng);
  SUBCASE("affine maps are recovered exactly") {
    Matrix m(2, 2);
    m << 1.5, -0.3, 0.2, 0.8;
    auto f = [&](const Vector& y) -> Vector { return m * y + Vector::Constant(2, 4.0); };
    const Matrix a = estimate_differential(f, Vector::Zero(2), 0.2, nb);
    CHECK((a - m).norm() < 1e-12);
  }
  SUBCASE("mildly nonlinear map is first-order accurate") {
    auto f = [](const Vector& y) -> Vector {
      Vector z(2);
      z << y(0) + 0.05 * std::sin(y(1)), y(1);
      return z;
    };
    Matrix want(2, 2);
    want << 1.0, 0.05, 0.0, 1.0;
    const double h = 0.1;
    const Matrix a = estimate_differential(f, Vector::Zero(2), h, nb);
    // Second derivatives are bounded by 0.05, so the fit error is at most 0.05 h.
    CHECK(op_norm(a - want) <= 0.05 * h);
  }
  SUBCASE("collinear neighbours are rank deficient") {
    RowMatrix line(2, 2);
    line << 0.01, 0.01, 0.02, 0.02;
    auto f = [](const Vector& y) -> Vector { return y; };
    CHECK_THROWS_AS(estimate_differential(f, Vector::Zero(2), 0.1, line), RankDeficientError);
    RowMatrix dy(1, 2), dz(1, 2);
    dy << 1, 0;
    dz << 1, 0;
    CHECK_THROWS_AS(fit_differential(dy, dz), RankDeficientError);
  }
  SUBCASE("default fit radius is four median spacings") {
    const Space g = ght::test::grid(10, 2, 0.1);
    CHECK(default_fit_radius(g.coords()) == doctest::Approx(0.4));
  }
  SUBCASE("isolated samples widen their radius") {
    RowMatrix src(5, 2);
    src << 0, 0, 0.01, 0, 0, 0.01, 0.01, 0.01, 0.5, 0.5;
    const SampledMap map(src, 2.0 * src);
    const Matrix a = map.differential(4, 0.05);
    CHECK((a - 2.0 * Matrix::Identity(2, 2)).norm() < 1e-12);
  }
}

TEST_CASE("chart validation") {
  const Fixture fx = planar(2000);
  const ChartReport r = validate_chart(fx.space, fx.atlas.charts.front(), 0.1);
  CHECK(r.bilip.factor() == doctest::Approx(1.0));
  CHECK(r.eps_ok);
  CHECK(r.compression_ok);

  FixtureSpec gs;
  gs.kind = FixtureKind::kLipschitzGraph;
  gs.n = 1500;
  gs.lip_g = 0.1;
  const Fixture graph = generate(gs);
  const Chart& gc = graph.atlas.charts.front();
  const ChartReport gr = validate_chart(graph.space, gc, 0.1);
  CHECK(gr.bilip.factor() <= std::sqrt(1.01) + 1e-12);
  CHECK(gc.eps == doctest::Approx(std::sqrt(1.01) - 1.0));
  CHECK(gr.eps_ok);

  Chart dup = fx.atlas.charts.front();
  dup.phi.row(1) = dup.phi.row(0);
  CHECK_THROWS_AS(validate_chart(fx.space, dup, 0.1), NonInjectiveChartError);
}

TEST_CASE("orthogonal composition keeps biLip factors") {
  const Fixture fx = planar(400);
  const Chart c = fx.atlas.charts.front();
  const BiLipFactors before = measure_bilip(fx.space, c);
  const BiLipFactors after = measure_bilip(fx.space, compose(rotation2(0.9), c));
  CHECK(after.forward == doctest::Approx(before.forward).epsilon(1e-12));
  CHECK(after.inverse == doctest::Approx(before.inverse).epsilon(1e-12));
}

TEST_CASE("split by density") {
  SUBCASE("uniform sample stays one chart") {
    const Fixture fx = planar(10000, true);
    const auto pieces = split_by_density(fx.space, fx.atlas.charts.front(), 0.05);
    CHECK(pieces.size() == 1);
  }
  SUBCASE("density 1 and 4 halves split in two") {
    // Left half at spacing h, right half at spacing h/2, reweighted so the
    // pushforward density is 1 on the left and 4 on the right.
    std::vector<Eigen::RowVector2d> pts;
    const double h = 1.0 / 60.0;
    for (int i = 0; i < 30; ++i)
      for (int j = 0; j < 60; ++j) pts.push_back({(i + 0.5) * h, (j + 0.5) * h});
    for (int i = 0; i < 60; ++i)
      for (int j = 0; j < 120; ++j) pts.push_back({0.5 + (i + 0.5) * h / 2, (j + 0.5) * h / 2});
    RowMatrix x(static_cast<Eigen::Index>(pts.size()), 2);
    for (std::size_t i = 0; i < pts.size(); ++i) x.row(static_cast<Eigen::Index>(i)) = pts[i];
    const Space s = Space::euclidean(x, std::vector<double>(pts.size(), h * h));
    const Chart c = identity_chart(s);
    const auto pieces = split_by_density(s, c, 0.04);
    REQUIRE(pieces.size() >= 2);
    std::size_t total = 0;
    for (const auto& p : pieces) {
      CHECK_FALSE(p.domain.empty());
      total += p.size();
    }
    CHECK(total == c.size());
    // Interior points land in the piece of their half.
    const auto levels = density_levels(s, c, 0.04);
    CHECK(levels[static_cast<std::size_t>(15 * 60 + 30)] == 0);
    CHECK(levels[1800 + 30 * 120 + 60] == 2);
  }
}

TEST_CASE("refinement trees") {
  const Fixture fx = planar(1000);
  const Chart whole = fx.atlas.charts.front();
  Atlas coarse;
  coarse.charts = {whole};
  SUBCASE("identical atlases give the identity tree") {
    const Refinement r = build_refinement(fx.space, coarse, coarse);
    CHECK(r.tree.parent == std::vector<std::size_t>{0});
    CHECK(r.tree.splits.empty());
  }
  SUBCASE("halves map to the whole") {
    Atlas fine;
    fine.charts = {whole.restrict_to(where(fx, [](double u, double) { return u < 0.5; })),
                   whole.restrict_to(where(fx, [](double u, double) { return u >= 0.5; }))};
    const Refinement r = build_refinement(fx.space, coarse, fine);
    CHECK(r.tree.parent == std::vector<std::size_t>{0, 0});
  }
  SUBCASE("straddling domain is split") {
    Atlas halves;
    halves.charts = {whole.restrict_to(where(fx, [](double u, double) { return u < 0.5; })),
                     whole.restrict_to(where(fx, [](double u, double) { return u >= 0.5; }))};
    const Refinement r = build_refinement(fx.space, halves, coarse);
    REQUIRE(r.fine.charts.size() == 2);
    CHECK(r.tree.splits.size() == 1);
    CHECK(measure(fx.space, r.fine.charts[0].domain) + measure(fx.space, r.fine.charts[1].domain) ==
          doctest::Approx(measure(fx.space, whole.domain)));
    for (std::size_t c = 0; c < 2; ++c)
      CHECK(r.fine.charts[c].domain.is_subset_of(halves.charts[r.tree.parent[c]].domain));
  }
  SUBCASE("uncovered fine mass beyond tolerance is an error") {
    Atlas left;
    left.charts = {whole.restrict_to(where(fx, [](double u, double) { return u < 0.5; }))};
    CHECK_THROWS_AS(build_refinement(fx.space, left, coarse), RefinementError);
  }
}

TEST_CASE("alignment defect closed forms") {
  const Fixture fx = planar(3000);
  const Chart c = fx.atlas.charts.front();
  CHECK(alignment_defect(fx.space, c, c) < 1e-12);
  for (double theta : {0.1, 0.4, 1.0}) {
    const double d = alignment_defect(fx.space, compose(rotation2(theta), c), c);
    CHECK(d == doctest::Approx(2.0 * std::sin(theta / 2.0)).epsilon(1e-10));
  }
  Chart shifted = c;
  shifted.phi.rowwise() += Eigen::RowVector2d(3.0, -1.0);
  CHECK(alignment_defect(fx.space, shifted, c) < 1e-10);
}

TEST_CASE("align") {
  const Fixture fx = planar(3000);
  const Chart c = fx.atlas.charts.front();
  Atlas prev;
  prev.charts = {c};
  SUBCASE("identity transitions keep the atlas") {
    const AlignResult r = align(fx.space, prev, prev, 0.1, 0.1);
    REQUIRE(r.atlas.charts.size() == 1);
    CHECK(r.charts[0].member == 0);
    CHECK(r.defect < 1e-10);
    CHECK(r.within_budget);
  }
  SUBCASE("rotated candidate snaps to a single cell") {
    Atlas fine = prev;
    fine.charts[0] = compose(rotation2(std::numbers::pi / 6.0), c);
    fine.charts[0].eps = 0.0;
    const AlignResult r = align(fx.space, prev, fine, 0.1, 0.1);
    REQUIRE(r.atlas.charts.size() == 1);
    CHECK(r.defect <= 0.1 + 1e-12);
    CHECK(r.net_term <= r.net_resolution + 1e-12);
    // Composed chart stays within the net resolution of the parent's differential.
    CHECK(alignment_defect(fx.space, r.atlas.charts[0], c) <= 0.1 + 1e-12);
    CHECK(r.atlas.charts[0].domain == c.domain);
  }
  SUBCASE("piecewise rotation splits into two aligned cells") {
    const PointSet left = where(fx, [](double u, double) { return u < 0.5; });
    const PointSet right = where(fx, [](double u, double) { return u >= 0.5; });
    const double a = 20.0 * std::numbers::pi / 180.0;
    Chart cand = c;
    for (std::size_t i = 0; i < cand.size(); ++i) {
      const bool l = left.contains(cand.domain[i]);
      cand.phi.row(static_cast<Eigen::Index>(i)) = c.phi.row(static_cast<Eigen::Index>(i)) * rotation2(l ? a : -a).transpose();
    }
    Atlas fine;
    fine.charts = {cand.restrict_to(left), cand.restrict_to(right)};
    const AlignResult r = align(fx.space, prev, fine, 0.1, 0.1);
    CHECK(r.atlas.charts.size() == 2);
    CHECK(r.defect <= 0.1 + 1e-12);
    // Cells partition the child domains exactly.
    PointSet all;
    for (const auto& ch : r.atlas.charts) all = set_union(all, ch.domain);
    CHECK(all == c.domain);
  }
  SUBCASE("precondition rejects loose charts") {
    Atlas fine = prev;
    fine.charts[0].eps = 0.2;
    CHECK_THROWS_AS(align(fx.space, prev, fine, 0.1, 0.1), PreconditionError);
  }
  SUBCASE("budget violations throw unless disabled") {
    Atlas fine = prev;
    fine.charts[0] = compose(rotation2(0.5), c);
    AlignOptions opt;
    opt.enforce_budget = false;
    // A coarse net leaves the identity as first hit for a 0.5 rad turn.
    const AlignResult r = align(fx.space, prev, fine, 0.1, 0.6, opt);
    CHECK_FALSE(r.within_budget);
    CHECK_THROWS_AS(align(fx.space, prev, fine, 0.1, 0.6), AlignmentBudgetError);
  }
}

TEST_CASE("planted tower defects match measurement") {
  FixtureSpec s;
  s.kind = FixtureKind::kRotatedPatches;
  s.n = 3000;
  const Fixture fx = generate(s);
  const AtlasTower t = make_atlas_tower(fx, 4);
  for (std::size_t m = 1; m <= 4; ++m)
    for (std::size_t c = 0; c < t.levels[m].charts.size(); ++c) {
      const double measured = alignment_defect(fx.space, t.levels[m].charts[c],
                                               t.levels[m - 1].charts[t.trees[m - 1].parent[c]]);
      CHECK(measured == doctest::Approx(t.planted_defects[m][c]).epsilon(1e-12));
      CHECK(t.planted_defects[m][c] == doctest::Approx(std::ldexp(1.0, -static_cast<int>(m))));
    }
}
