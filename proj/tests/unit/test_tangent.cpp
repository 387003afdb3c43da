// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "ghtangent/align.hpp"
#include "ghtangent/differential.hpp"
#include "ghtangent/fixtures.hpp"
#include "ghtangent/linalg.hpp"
#include "ghtangent/tangent.hpp"
#include "ghtangent/transport.hpp"

using namespace ght;

namespace {

Fixture planar(std::size_t n, FixtureKind kind = FixtureKind::kEuclideanPatch) {
  FixtureSpec spec;
  spec.kind = kind;
  spec.n = n;
  return generate(spec);
}

ChartVectors random_vectors(const Chart& c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  ChartVectors v{c.domain, RowMatrix(static_cast<Eigen::Index>(c.size()), c.k)};
  for (Eigen::Index i = 0; i < v.rows.size(); ++i) v.rows.data()[i] = g(rng);
  return v;
}

Chart affine(const Chart& c, const Matrix& m) {
  Chart out = compose(m, c);
  out.phi.rowwise() += Eigen::RowVector2d(0.7, -0.2);
  return out;
}

}  // namespace

TEST_CASE("bundles from labels and atlases") {
  const Fixture mixed = planar(900, FixtureKind::kMixedDimension);
  const GHBundle a = GHBundle::from_atlas(mixed.space, mixed.atlas);
  const GHBundle b = GHBundle::from_space(mixed.space);
  CHECK(a.fiber_dims() == b.fiber_dims());
  CHECK(a.dimensions() == std::vector<int>{1, 2});
  CHECK(a.stratum(1).size() + a.stratum(2).size() == mixed.space.size());
  CHECK(a.stratum(3).empty());
}

TEST_CASE("section algebra") {
  const Fixture fx = planar(50);
  const GHBundle b = GHBundle::from_atlas(fx.space, fx.atlas);
  const Section v = random_section(b.fiber_dims(), 1);
  const std::vector<double> one(50, 1.0);
  const Section same = multiply(std::span<const double>(one), v);
  for (Index x = 0; x < 50; ++x) CHECK(same[x] == v[x]);

  const Section zero = combine(1.0, v, -1.0, v);
  for (Index x = 0; x < 50; ++x) CHECK(zero[x].norm() == 0.0);

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::vector<double> h(50);
  for (double& t : h) t = u(rng);
  const auto nhv = pointwise_norm(multiply(std::span<const double>(h), v));
  const auto nv = pointwise_norm(v);
  for (Index x = 0; x < 50; ++x) CHECK(nhv[x] == doctest::Approx(std::abs(h[x]) * nv[x]).epsilon(1e-15));

  Section wrong = Section::zeros(b);
  wrong[3] = Vector::Zero(3);
  CHECK_THROWS_AS(check_fibers(b, wrong), FiberMismatchError);
  CHECK_THROWS_AS(combine(1.0, v, 1.0, Section()), FiberMismatchError);
}

TEST_CASE("local dimension") {
  const Fixture fx = planar(400);
  const GHBundle b = GHBundle::from_atlas(fx.space, fx.atlas);
  auto coord = [&](int axis, double scale) {
    Section s = Section::zeros(b);
    for (Index x = 0; x < s.size(); ++x) s[x](axis) = scale;
    return s;
  };
  const PointSet a2 = b.stratum(2);
  const std::vector<Section> basis{coord(0, 1), coord(1, 1)};
  CHECK(local_dimension(b, basis, a2, 0.0) == std::optional<std::size_t>(2));
  const std::vector<Section> dep{coord(0, 1), coord(0, 2)};
  CHECK_FALSE(local_dimension(b, dep, a2, 0.0).has_value());
  const std::vector<Section> rnd{random_section(b.fiber_dims(), 4), random_section(b.fiber_dims(), 5)};
  CHECK(local_dimension(b, rnd, a2, 0.0) == std::optional<std::size_t>(2));
  // A degenerate subset below the mass tolerance is tolerated.
  std::vector<Section> spoiled = basis;
  spoiled[1][a2[0]].setZero();
  CHECK_FALSE(local_dimension(b, spoiled, a2, 0.0).has_value());
  CHECK(local_dimension(b, spoiled, a2, 0.01) == std::optional<std::size_t>(2));
}

TEST_CASE("push, pull and duality") {
  const Fixture fx = planar(1500);
  const Chart c = fx.atlas.charts.front();
  const ChartVectors v = random_vectors(c, 1);
  const double h = 0.1;

  SUBCASE("identity transition") {
    const ChartVectors w = push_section(c, c, v, h);
    CHECK((w.rows - v.rows).norm() < 1e-12);
  }
  SUBCASE("rotation is applied exactly") {
    const Matrix r = rotation2(0.8);
    const Chart to = affine(c, r);
    const ChartVectors w = push_section(c, to, v, h);
    CHECK((w.rows - v.rows * r.transpose()).norm() < 1e-10);
    ChartVectors z = v;
    z.rows.setZero();
    CHECK(push_section(c, to, z, h).rows.norm() < 1e-300);
  }
  SUBCASE("linearity") {
    const Chart to = affine(c, rotation2(0.3) * 1.2);
    const ChartVectors u = random_vectors(c, 2);
    ChartVectors mix = v;
    mix.rows = 2.0 * v.rows - 0.5 * u.rows;
    const auto pv = push_section(c, to, v, h), pu = push_section(c, to, u, h), pm = push_section(c, to, mix, h);
    CHECK((pm.rows - (2.0 * pv.rows - 0.5 * pu.rows)).norm() < 1e-10);
  }
  SUBCASE("scaling pulls covectors back doubled") {
    const Chart to = compose(2.0 * Matrix::Identity(2, 2), c);
    ChartCovectors om{c.domain, RowMatrix(static_cast<Eigen::Index>(c.size()), 2)};
    om.rows.rowwise() = Eigen::RowVector2d(0.3, -1.1);
    const ChartCovectors p = pull_form(c, to, om, h);
    CHECK((p.rows - 2.0 * om.rows).norm() < 1e-10);
  }
  SUBCASE("pullback of df is d(f o transition)") {
    Matrix m(2, 2);
    m << 1.1, 0.2, -0.3, 0.9;
    const Chart to = affine(c, m);
    const Eigen::RowVector2d grad(0.5, 2.0);  // f(z) = grad . z
    ChartCovectors df{c.domain, RowMatrix(static_cast<Eigen::Index>(c.size()), 2)};
    df.rows.rowwise() = grad;
    const ChartCovectors p = pull_form(c, to, df, h);
    // Independent gradient fit of f o transition in from-coordinates.
    std::vector<double> vals(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) vals[i] = grad.dot(to.phi.row(static_cast<Eigen::Index>(i)));
    RowMatrix dy(static_cast<Eigen::Index>(c.size()) - 1, 2), dz(static_cast<Eigen::Index>(c.size()) - 1, 1);
    for (Eigen::Index i = 1; i < static_cast<Eigen::Index>(c.size()); ++i) {
      dy.row(i - 1) = c.phi.row(i) - c.phi.row(0);
      dz(i - 1, 0) = vals[static_cast<std::size_t>(i)] - vals[0];
    }
    const Matrix g = fit_differential(dy, dz);
    for (Eigen::Index i = 0; i < p.rows.rows(); i += 50) CHECK((p.rows.row(i) - g.row(0)).norm() < 1e-10);
  }
  SUBCASE("duality defect vanishes by construction") {
    const Chart to = affine(c, rotation2(1.0));
    ChartCovectors om{c.domain, RowMatrix(static_cast<Eigen::Index>(c.size()), 2)};
    om.rows = random_vectors(c, 7).rows;
    for (double d : duality_defect(c, to, om, v, h)) CHECK(d < 1e-12);
    ChartVectors z = v;
    z.rows.setZero();
    for (double d : duality_defect(c, to, om, z, h)) CHECK(d == 0.0);
  }
}

TEST_CASE("chain defect") {
  const Fixture fx = planar(1500);
  const Chart c = fx.atlas.charts.front();
  const ChartVectors v = random_vectors(c, 3);
  for (double d : chain_defect(c, c, c, v, 0.1).defect) CHECK(d < 1e-12);
  const Chart a = compose(rotation2(0.4), c);
  const Chart ab = compose(rotation2(1.1), c);
  for (double d : chain_defect(c, a, ab, v, 0.1).defect) CHECK(d < 1e-12);
}

TEST_CASE("transport plans") {
  SUBCASE("identity tower") {
    const Fixture fx = planar(1000);
    const AtlasTower t = make_atlas_tower(fx, 3);
    const TransportPlan plan = TransportPlan::build(fx.space, t.levels, t.trees);
    const Section v = random_section(plan.fiber_dims(), 1);
    for (std::size_t n = 0; n <= 3; ++n) {
      const Section w = iso_step(plan, v, n);
      for (Index x = 0; x < v.size(); ++x) CHECK((w[x] - v[x]).norm() < 1e-12);
      CHECK(roundtrip_error(plan, v, n) < 1e-12);
    }
    const std::vector<Section> probes{v, Section::zeros(plan.fiber_dims())};
    for (const auto& row : contraction_profile(plan, probes, 3)) {
      CHECK(row.empirical < 1e-12);
      CHECK(row.probes_used == 1);  // the zero probe is skipped
    }
    const NormDeviation nd = norm_preservation(plan, Section::zeros(plan.fiber_dims()), 2);
    CHECK(nd.max == 0.0);
  }
  SUBCASE("snapped rotations act exactly") {
    FixtureSpec s;
    s.kind = FixtureKind::kRotatedPatches;
    s.n = 2000;
    const Fixture fx = generate(s);
    const AtlasTower t = make_atlas_tower(fx, 3);
    const AlignedTower a = align_tower(fx.space, t.levels);
    const TransportPlan plan = TransportPlan::build(fx.space, a.levels, a.trees);
    const Section v = random_section(plan.fiber_dims(), 2);
    const Section w = iso_step(plan, v, 1);
    const auto owners = a.levels[1].owners(fx.space.size());
    const auto owners0 = a.levels[0].owners(fx.space.size());
    for (Index x = 0; x < v.size(); x += 37) {
      // Level-1 chart at x is composed from level 0 by an exact affine map.
      const Chart& c1 = a.levels[1].charts[static_cast<std::size_t>(owners[x])];
      const Chart& c0 = a.levels[0].charts[static_cast<std::size_t>(owners0[x])];
      const auto d = transition_differentials(c0.restrict_to(c1.domain), c1, 0.0);
      const auto pos = *c1.domain.position(x);
      CHECK((w[x] - d[pos] * v[x]).norm() < 1e-10);
    }
    CHECK(roundtrip_error(plan, v, 3) < 1e-10);
    const Section back = iso_inverse(plan, Section::zeros(plan.fiber_dims()), 2);
    for (Index x = 0; x < back.size(); ++x) CHECK(back[x].norm() == 0.0);
    for (std::size_t n = 0; n <= 3; ++n)
      for (Index x = 0; x < v.size(); x += 101)
        CHECK(plan.condition(n, x) <= plan.condition_bound(n, x) * (1 + 1e-9));
  }
}
