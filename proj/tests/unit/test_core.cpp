// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "ghtangent/kdtree.hpp"
#include "ghtangent/point_set.hpp"
#include "ghtangent/space.hpp"
#include "helpers.hpp"

using namespace ght;
using ght::test::grid;
using ght::test::uniform_cube;

TEST_CASE("point sets are sorted and reject duplicates") {
  const PointSet a = PointSet::from_indices({5, 1, 3});
  CHECK(a.indices() == std::vector<Index>{1, 3, 5});
  CHECK(a.contains(3));
  CHECK_FALSE(a.contains(2));
  CHECK(a.position(5) == std::optional<std::size_t>(2));
  CHECK(a.bound() == 6);
  CHECK_THROWS_AS(PointSet::from_indices({1, 1}), std::invalid_argument);

  const PointSet b = PointSet::from_sorted({1, 2, 5});
  CHECK(set_union(a, b).indices() == std::vector<Index>{1, 2, 3, 5});
  CHECK(set_intersection(a, b).indices() == std::vector<Index>{1, 5});
  CHECK(set_difference(a, b).indices() == std::vector<Index>{3});
  CHECK(set_intersection(a, b).is_subset_of(a));
  CHECK(PointSet::range(4).size() == 4);
}

TEST_CASE("kd-tree radius and nearest queries match brute force") {
  const Space s = uniform_cube(600, 3, 7);
  const KdTree tree(s.coords(), 8);
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<Index> pick(0, s.size() - 1);
  for (int t = 0; t < 40; ++t) {
    const Index x = pick(rng);
    const auto d = ght::test::brute_dist_row(s, x);
    const double r = 0.05 + 0.01 * t;
    std::vector<std::size_t> got;
    tree.radius(s.coords().row(static_cast<Eigen::Index>(x)).data(), r, got);
    std::vector<std::size_t> want;
    for (Index y = 0; y < s.size(); ++y)
      if (d[y] < r) want.push_back(y);
    CHECK(got == want);

    double nd = 0.0;
    const auto nn = tree.nearest(s.coords().row(static_cast<Eigen::Index>(x)).data(), &nd, x);
    double best = std::numeric_limits<double>::infinity();
    for (Index y = 0; y < s.size(); ++y)
      if (y != x) best = std::min(best, d[y]);
    CHECK(nd == doctest::Approx(best));
    CHECK(d[nn] == doctest::Approx(best));
  }
}

TEST_CASE("validate_space") {
  SUBCASE("single point is valid") {
    const Space s = Space::euclidean(RowMatrix::Zero(1, 2), {1.0});
    CHECK(validate_space(s, 1000).ok());
  }
  SUBCASE("uniform planar sample is valid") {
    const ValidationReport r = validate_space(uniform_cube(100, 2, 1), 1'000'000);
    CHECK(r.ok());
    CHECK(r.exhaustive_triples);
  }
  SUBCASE("planted triangle violation carries its witness") {
    std::vector<double> t{0, 1, 10, 1, 0, 1, 10, 1, 0};
    const Space s = Space::from_table(3, t, {1, 1, 1});
    const ValidationReport r = validate_space(s, 100);
    const Violation* v = r.find(Axiom::kTriangle);
    REQUIRE(v != nullptr);
    std::vector<Index> w = v->witness;
    std::sort(w.begin(), w.end());
    CHECK(w == std::vector<Index>{0, 1, 2});
    CHECK(v->magnitude == doctest::Approx(8.0));
  }
  SUBCASE("asymmetry, diagonal and weights are reported") {
    std::vector<double> t{0.5, 1, 2, 0};
    const Space s = Space::from_table(2, t, {1.0, -1.0});
    const ValidationReport r = validate_space(s, 10);
    CHECK(r.find(Axiom::kNonzeroDiagonal));
    CHECK(r.find(Axiom::kAsymmetric));
    CHECK(r.find(Axiom::kNegativeWeight));
  }
}

TEST_CASE("balls are open") {
  RowMatrix line(11, 1);
  for (int i = 0; i <= 10; ++i) line(i, 0) = 0.1 * i;
  const Space s = Space::euclidean(line, std::vector<double>(11, 1.0));
  CHECK(ball(s, 5, 0.15).indices() == std::vector<Index>{4, 5, 6});
  CHECK(ball(s, 5, 10.0).size() == 11);
  CHECK(ball(s, 5, 1e-9).indices() == std::vector<Index>{5});
  // Exactly at distance r the point is excluded.
  const Space g = grid(5, 1);
  CHECK(ball(g, 2, 1.0).indices() == std::vector<Index>{2});
  CHECK_THROWS(ball(g, 99, 1.0));
}

TEST_CASE("measure is additive") {
  const Space s = grid(10, 2);
  CHECK(measure(s, PointSet()) == 0.0);
  CHECK(measure(s, s.all()) == 100.0);
  std::mt19937_64 rng(5);
  std::vector<Index> e;
  for (Index x = 0; x < s.size(); ++x)
    if (rng() % 3 == 0) e.push_back(x);
  const PointSet a = PointSet::from_sorted(e);
  CHECK(measure(s, a) + measure(s, set_difference(s.all(), a)) == doctest::Approx(s.total_mass()));
}

TEST_CASE("density of the left half-square") {
  const Space s = grid(101, 2, 0.01);
  std::vector<Index> left;
  for (Index x = 0; x < s.size(); ++x)
    if (s.coords()(static_cast<Eigen::Index>(x), 0) < 0.5 - 1e-9) left.push_back(x);
  const PointSet e = PointSet::from_sorted(left);
  auto at = [&](double u, double v) {
    return static_cast<Index>(std::lround(u / 0.01) + 101 * std::lround(v / 0.01));
  };
  CHECK(density(s, s.all(), at(0.3, 0.3), 0.1) == 1.0);
  CHECK(density(s, e, at(0.2, 0.5), 0.05) == 1.0);
  CHECK(density(s, e, at(0.5, 0.5), 0.1) == doctest::Approx(0.5).epsilon(0.05));
  // Monotone under inclusion.
  const PointSet sub = PointSet::from_sorted(std::vector<Index>(left.begin(), left.begin() + left.size() / 2));
  for (double r : {0.05, 0.1, 0.3})
    CHECK(density(s, sub, at(0.4, 0.4), r) <= density(s, e, at(0.4, 0.4), r));
}

TEST_CASE("density_one_points") {
  const Space s = grid(61, 2, 1.0 / 60.0);
  const std::vector<double> scales{0.1, 0.05};
  CHECK(density_one_points(s, s.all(), scales, 0.05) == s.all());

  std::vector<Index> left;
  for (Index x = 0; x < s.size(); ++x)
    if (s.coords()(static_cast<Eigen::Index>(x), 0) < 0.5) left.push_back(x);
  const PointSet e = PointSet::from_sorted(left);
  const PointSet d1 = density_one_points(s, e, scales, 0.05);
  CHECK(d1.is_subset_of(e));
  for (Index x : e)
    if (0.5 - s.coords()(static_cast<Eigen::Index>(x), 0) > scales.front()) CHECK(d1.contains(x));

  const PointSet single = PointSet::from_indices({s.size() / 2});
  CHECK(density_one_points(s, single, scales, 0.05).empty());
}

TEST_CASE("doubling constants") {
  const Space one = Space::euclidean(RowMatrix::Zero(1, 1), {1.0});
  const std::vector<double> r1{1.0};
  CHECK(doubling_constant(one, r1) == 1.0);

  const Space line = grid(401, 1);
  const PointSet interior = PointSet::from_indices({150, 200, 250});
  const std::vector<double> radii{5.5, 10.5, 20.5};
  CHECK(doubling_constant(line, radii, interior) == doctest::Approx(2.0).epsilon(0.06));

  const Space plane = grid(101, 2);
  const PointSet centre = PointSet::from_indices({50 + 101 * 50});
  const std::vector<double> pr{8.0, 12.0};
  CHECK(doubling_constant(plane, pr, centre) == doctest::Approx(4.0).epsilon(0.08));

  // Two far-separated grids: the constant of the union is the max of the parts.
  RowMatrix both(2 * 41, 1);
  for (int i = 0; i < 41; ++i) {
    both(i, 0) = i;
    both(41 + i, 0) = 1000.0 + 0.5 * i;
  }
  const Space u = Space::euclidean(both, std::vector<double>(82, 1.0));
  const Space a = Space::euclidean(both.topRows(41), std::vector<double>(41, 1.0));
  const Space b = Space::euclidean(both.bottomRows(41), std::vector<double>(41, 1.0));
  const std::vector<double> small{1.5, 3.5};
  CHECK(doubling_constant(u, small) == std::max(doubling_constant(a, small), doubling_constant(b, small)));
}

TEST_CASE("ball averages") {
  const Space s = uniform_cube(4000, 2, 9);
  const Index x = [&] {
    Index best = 0;
    for (Index y = 0; y < s.size(); ++y)
      if ((s.coords().row(static_cast<Eigen::Index>(y)).array() - 0.5).matrix().norm() <
          (s.coords().row(static_cast<Eigen::Index>(best)).array() - 0.5).matrix().norm())
        best = y;
    return best;
  }();
  const std::vector<double> c(s.size(), 3.25);
  CHECK(ball_average(s, c, x, 0.2) == doctest::Approx(3.25));

  std::vector<double> f(s.size());
  for (Index y = 0; y < s.size(); ++y) f[y] = s.coords()(static_cast<Eigen::Index>(y), 0);
  for (double r : {0.2, 0.1, 0.05}) CHECK(std::abs(ball_average(s, f, x, r) - f[x]) <= r);

  std::vector<Index> e;
  std::vector<double> ind(s.size(), 0.0);
  for (Index y = 0; y < s.size(); ++y)
    if (f[y] + s.coords()(static_cast<Eigen::Index>(y), 1) < 1.0) {
      e.push_back(y);
      ind[y] = 1.0;
    }
  // Indicator averages are densities.
  for (double r : {0.05, 0.1, 0.3})
    CHECK(ball_average(s, ind, x, r) == doctest::Approx(density(s, PointSet::from_sorted(e), x, r)));
}

TEST_CASE("distances and resolution") {
  const Space g = grid(10, 2, 0.1);
  CHECK(sampling_resolution(g) == doctest::Approx(0.1));
  const auto d = distance_to_set(g, PointSet::from_indices({0}));
  const auto want = ght::test::brute_dist_row(g, 0);
  for (Index y = 0; y < g.size(); ++y) CHECK(d[y] == doctest::Approx(want[y]));
  CHECK_THROWS(distance_to_set(g, PointSet()));

  const Space t = Space::from_table(g.size(), g.distance_table(), g.weights());
  for (Index y = 0; y < g.size(); y += 7) CHECK(t.dist(3, y) == doctest::Approx(g.dist(3, y)).epsilon(1e-12));
}

TEST_CASE("density point gap on the half-square shrinks with scale") {
  const Space s = grid(81, 2, 1.0 / 80.0);
  std::vector<Index> left;
  for (Index x = 0; x < s.size(); ++x)
    if (s.coords()(static_cast<Eigen::Index>(x), 0) < 0.5) left.push_back(x);
  const PointSet e = PointSet::from_sorted(left);
  const auto d1 = density_one_points(s, e, std::vector<double>{0.1, 0.05}, 0.05);
  // For density-one points well inside E, every nearby probe has a close
  // point of E: the gap ratio stays below 1/2 at small scales.
  std::size_t checked = 0;
  for (Index x : d1) {
    if (checked > 50) break;
    if (s.coords()(static_cast<Eigen::Index>(x), 0) > 0.3) continue;
    CHECK(density_point_gap(s, e, x, 0.05) <= 0.5);
    ++checked;
  }
  CHECK(checked > 0);
}
