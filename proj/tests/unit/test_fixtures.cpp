// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include <unistd.h>

#include "doctest.h"
#include "ghtangent/chart.hpp"
#include "ghtangent/fixtures.hpp"
#include "ghtangent/io.hpp"

using namespace ght;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("ght_unit_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir / name;
}

bool same_atlas(const Atlas& a, const Atlas& b) {
  if (a.level != b.level || a.eps != b.eps || a.delta != b.delta || a.charts.size() != b.charts.size()) return false;
  for (std::size_t i = 0; i < a.charts.size(); ++i) {
    const Chart &x = a.charts[i], &y = b.charts[i];
    if (x.k != y.k || !(x.domain == y.domain) || x.phi != y.phi || x.eps != y.eps || x.comp != y.comp) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("fixture generation") {
  SUBCASE("euclidean patch has one exact identity chart") {
    const Fixture fx = generate(FixtureSpec{});
    REQUIRE(fx.atlas.charts.size() == 1);
    const Chart& c = fx.atlas.charts[0];
    CHECK(c.eps == 0.0);
    CHECK(c.comp == 1.0);
    CHECK(c.size() == 2000);
    CHECK(fx.space.total_mass() == doctest::Approx(1.0));
    CHECK(validate_chart(fx.space, c, 0.1).ok());
  }
  SUBCASE("lipschitz graph carries the closed-form factor") {
    FixtureSpec s;
    s.kind = FixtureKind::kLipschitzGraph;
    s.n = 1500;
    s.lip_g = 0.1;
    const Fixture fx = generate(s);
    CHECK(fx.truth.charts[0].bilip_factor == doctest::Approx(std::sqrt(1.01)));
    const ChartReport r = validate_chart(fx.space, fx.atlas.charts[0], 0.1);
    CHECK(r.bilip.factor() <= fx.truth.charts[0].bilip_factor * 1.01);
    CHECK(r.eps_ok);
  }
  SUBCASE("mixed dimension has both strata") {
    FixtureSpec s;
    s.kind = FixtureKind::kMixedDimension;
    s.n = 900;
    const Fixture fx = generate(s);
    std::set<int> ks;
    for (const auto& c : fx.atlas.charts) ks.insert(c.k);
    CHECK(ks == std::set<int>{1, 2});
    CHECK(fx.space.has_dim_label());
    CHECK(fx.truth.doubling_constant.value_or(0.0) == 4.0);
  }
  SUBCASE("generation is deterministic per seed") {
    FixtureSpec s;
    s.seed = 42;
    const Fixture a = generate(s), b = generate(s);
    CHECK(a.space.coords() == b.space.coords());
    s.seed = 43;
    CHECK_FALSE(generate(s).space.coords() == a.space.coords());
  }
  SUBCASE("invalid specs are rejected") {
    FixtureSpec s;
    s.n = 2;
    CHECK_THROWS_AS(generate(s), std::invalid_argument);
    s = FixtureSpec{};
    s.kind = FixtureKind::kRotatedPatches;
    s.k = 1;
    CHECK_THROWS_AS(generate(s), std::invalid_argument);
    s.k = 2;
    s.angles = {0.1};
    CHECK_THROWS_AS(generate(s), std::invalid_argument);
    CHECK_THROWS(parse_fixture_kind("torus"));
  }
}

TEST_CASE("atlas towers") {
  SUBCASE("identity tower has zero planted defects") {
    const Fixture fx = generate(FixtureSpec{});
    const AtlasTower t = make_atlas_tower(fx, 3);
    REQUIRE(t.levels.size() == 4);
    for (std::size_t m = 1; m <= 3; ++m) {
      CHECK(t.levels[m].eps == std::ldexp(1.0, -static_cast<int>(m)));
      for (double d : t.planted_defects[m]) CHECK(d == 0.0);
      // Every child domain lies inside its parent.
      for (std::size_t c = 0; c < t.levels[m].charts.size(); ++c)
        CHECK(t.levels[m].charts[c].domain.is_subset_of(t.levels[m - 1].charts[t.trees[m - 1].parent[c]].domain));
    }
  }
  SUBCASE("mixed-dimension towers stay within their dimension") {
    FixtureSpec s;
    s.kind = FixtureKind::kMixedDimension;
    s.n = 900;
    const Fixture fx = generate(s);
    const AtlasTower t = make_atlas_tower(fx, 2);
    for (std::size_t m = 1; m <= 2; ++m)
      for (std::size_t c = 0; c < t.levels[m].charts.size(); ++c)
        CHECK(t.levels[m].charts[c].k == t.levels[m - 1].charts[t.trees[m - 1].parent[c]].k);
  }
  SUBCASE("piecewise towers need alignment") {
    FixtureSpec s;
    s.kind = FixtureKind::kPiecewiseRotation;
    s.n = 1000;
    CHECK_FALSE(make_atlas_tower(generate(s), 2).aligned);
  }
}

TEST_CASE("space files") {
  FixtureSpec s;
  s.n = 300;
  const Fixture fx = generate(s);
  const fs::path p = scratch("space.json");
  io::save_space(p, fx.space);
  const Space back = io::load_space(p);
  CHECK(back.coords() == fx.space.coords());
  CHECK(back.weights() == fx.space.weights());

  // Table-backed copy: regenerated distances agree with the stored table.
  const fs::path t = scratch("space_table.json");
  io::save_space(t, fx.space, fs::path("space_table.dist.bin"));
  const Space tab = io::load_space(t);
  CHECK_FALSE(tab.has_coords());
  const auto want = fx.space.distance_table();
  double worst = 0.0;
  for (std::size_t i = 0; i < want.size(); ++i) worst = std::max(worst, std::abs(tab.table()[i] - want[i]));
  CHECK(worst <= 1e-12);

  // Truncations and mismatches are format errors.
  {
    const std::string text = io::read_text(p);
    io::write_text(scratch("trunc.json"), text.substr(0, text.size() / 2));
  }
  CHECK_THROWS_AS(io::load_space(scratch("trunc.json")), FormatError);
  CHECK_THROWS_AS(io::read_dist_table(t.parent_path() / "space_table.dist.bin", 7), FormatError);
  io::write_text(scratch("schema.json"), R"({"schema_version": 99, "points": 1, "weights": [1], "coords": [[0]]})");
  CHECK_THROWS_AS(io::load_space(scratch("schema.json")), FormatError);
  io::write_text(scratch("both.json"), R"({"schema_version": 1, "points": 1, "weights": [1]})");
  CHECK_THROWS_AS(io::load_space(scratch("both.json")), FormatError);
}

TEST_CASE("atlas, tree, section and field files") {
  FixtureSpec s;
  s.kind = FixtureKind::kRotatedPatches;
  s.n = 400;
  const Fixture fx = generate(s);
  const AtlasTower tower = make_atlas_tower(fx, 2);
  const fs::path a = scratch("atlas.json");
  io::save_atlas(a, tower.levels[2]);
  CHECK(same_atlas(io::load_atlas(a), tower.levels[2]));
  CHECK(io::atlas_to_string(io::atlas_from_string(io::atlas_to_string(tower.levels[1]))) ==
        io::atlas_to_string(tower.levels[1]));

  const fs::path tr = scratch("tree.json");
  io::save_tree(tr, tower.trees[1]);
  const RefinementTree t = io::load_tree(tr);
  CHECK(t.parent == tower.trees[1].parent);
  CHECK(t.splits.size() == tower.trees[1].splits.size());

  const GHBundle b = GHBundle::from_atlas(fx.space, fx.atlas);
  const Section v = random_section(b.fiber_dims(), 3);
  const fs::path sp = scratch("section.json");
  io::save_section(sp, v, "space.json");
  std::string ref;
  const Section w = io::load_section(sp, &ref);
  CHECK(ref == "space.json");
  for (Index x = 0; x < v.size(); ++x) CHECK(w[x] == v[x]);

  const std::vector<std::optional<double>> f{1.5, std::nullopt, -2.0};
  const fs::path fp = scratch("field.json");
  io::save_scalar_field(fp, f);
  CHECK(io::load_scalar_field(fp) == f);
  io::write_text(scratch("bare.json"), "[0.5, null]");
  CHECK(io::load_scalar_field(scratch("bare.json")).size() == 2);

  FixtureSpec spec;
  spec.kind = FixtureKind::kLipschitzGraph;
  spec.lip_g = 0.25;
  spec.tower = GraphTower::kDilation;
  spec.lattice = true;
  const FixtureSpec round = io::fixture_spec_from_string(io::fixture_spec_to_string(spec));
  CHECK(round.kind == spec.kind);
  CHECK(round.lip_g == spec.lip_g);
  CHECK(round.tower == spec.tower);
  CHECK(round.lattice);
  CHECK_THROWS_AS(io::fixture_spec_from_string("{\"kind\": 3"), FormatError);
}

TEST_CASE("csv output uses round-trip doubles") {
  io::CsvTable t({"a", "b"});
  t.row().add(0.1).add(std::size_t{3});
  t.row().add(1.0 / 3.0).add("x");
  const std::string s = t.str();
  CHECK(s.rfind("a,b\n", 0) == 0);
  CHECK(std::stod(io::format_double(1.0 / 3.0)) == 1.0 / 3.0);
  CHECK(t.rows() == 2);
}
