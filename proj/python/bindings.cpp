// SPDX-License-Identifier: Apache-2.0
// Python bindings: thin wrappers over the C++ API. Point sets cross the
// boundary as lists of indices, matrices as NumPy arrays.
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <optional>

#include "ghtangent/align.hpp"
#include "ghtangent/blowup.hpp"
#include "ghtangent/chart.hpp"
#include "ghtangent/fixtures.hpp"
#include "ghtangent/lip.hpp"
#include "ghtangent/ortho_net.hpp"
#include "ghtangent/space.hpp"
#include "ghtangent/tangent.hpp"
#include "ghtangent/transport.hpp"

namespace py = pybind11;
using namespace ght;

#define GHT_STR2(x) #x
#define GHT_STR(x) GHT_STR2(x)

namespace {

PointSet to_set(const std::vector<Index>& idx) { return PointSet::from_indices(idx); }

py::dict defect_dict(const DefectRecord& r) {
  py::dict d;
  d["n"] = r.n;
  d["r"] = r.r;
  d["distortion"] = r.distortion;
  d["coverage_gap"] = r.coverage_gap;
  d["pairs_used"] = r.pairs_used;
  d["grid_points"] = r.grid_points;
  d["exhaustive"] = r.exhaustive;
  d["covered"] = r.covered;
  d["empty_ball"] = r.empty_ball;
  d["eps_bar"] = r.eps_bar;
  return d;
}

// Candidate tower, optionally aligned, and the transport statistics over
// `probes` random sections.
py::dict run_tower(const Fixture& fx, std::size_t levels, bool do_align, std::size_t probes, std::uint64_t seed) {
  const AtlasTower tower = make_atlas_tower(fx, levels);
  py::dict out;
  std::vector<Atlas> atlases = tower.levels;
  std::vector<RefinementTree> trees = tower.trees;
  py::list defects;
  if (do_align) {
    AlignedTower a = align_tower(fx.space, tower.levels);
    for (const auto& s : a.steps) defects.append(s.defect);
    atlases = std::move(a.levels);
    trees = std::move(a.trees);
  } else {
    for (std::size_t m = 1; m < tower.levels.size(); ++m) {
      double d = 0.0;
      for (double p : tower.planted_defects[m]) d = std::max(d, p);
      defects.append(d);
    }
  }
  out["defects"] = defects;
  out["charts_per_level"] = [&] {
    std::vector<std::size_t> n;
    for (const auto& a : atlases) n.push_back(a.charts.size());
    return n;
  }();
  const TransportPlan plan = TransportPlan::build(fx.space, atlases, trees);
  std::vector<Section> ps;
  for (std::size_t i = 0; i < probes; ++i) ps.push_back(random_section(plan.fiber_dims(), seed + i));
  py::list rows;
  for (const auto& r : contraction_profile(plan, ps, levels)) {
    py::dict d;
    d["level"] = r.level;
    d["bound"] = r.bound;
    d["empirical"] = r.empirical;
    d["probes_used"] = r.probes_used;
    rows.append(d);
  }
  out["contraction"] = rows;
  std::vector<double> dev, trip;
  for (std::size_t n = 0; n <= levels; ++n) {
    double a = 0.0, b = 0.0;
    for (const auto& v : ps) {
      a = std::max(a, norm_preservation(plan, v, n).max);
      b = std::max(b, roundtrip_error(plan, v, n));
    }
    dev.push_back(a);
    trip.push_back(b);
  }
  out["norm_deviation"] = dev;
  out["roundtrip_error"] = trip;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Charts, aligned atlases, tangent transport and blow-ups on weighted point clouds";
  m.attr("__version__") = GHT_STR(GHT_VERSION_INFO);

  static py::exception<Error> base(m, "Error", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      PyErr_SetString(base.ptr(), e.what());
    }
  });

  py::class_<Space>(m, "Space")
      .def_static(
          "euclidean",
          [](RowMatrix coords, std::vector<double> weights, std::vector<int> dim_label) {
            return Space::euclidean(std::move(coords), std::move(weights), std::move(dim_label));
          },
          py::arg("coords"), py::arg("weights"), py::arg("dim_label") = std::vector<int>{})
      .def_property_readonly("size", &Space::size)
      .def_property_readonly("coords", &Space::coords)
      .def_property_readonly("weights", &Space::weights)
      .def_property_readonly("total_mass", &Space::total_mass)
      .def_property_readonly("dim_label", py::overload_cast<>(&Space::dim_label, py::const_))
      .def("dist", [](const Space& s, Index i, Index j) {
        s.check_index(i);
        s.check_index(j);
        return s.dist(i, j);
      })
      .def("__len__", &Space::size);

  m.def(
      "validate_space",
      [](const Space& s, std::size_t triples, std::uint64_t seed) {
        const ValidationReport r = validate_space(s, triples, seed);
        std::vector<std::string> names;
        for (const auto& v : r.violations) names.push_back(to_string(v.axiom));
        return names;
      },
      py::arg("space"), py::arg("triple_samples") = 1'000'000, py::arg("seed") = 0,
      "Names of the violated metric-measure axioms; empty when valid.");
  m.def("ball", [](const Space& s, Index x, double r) { return ball(s, x, r).indices(); });
  m.def("measure", [](const Space& s, const std::vector<Index>& e) { return measure(s, to_set(e)); });
  m.def("density", [](const Space& s, const std::vector<Index>& e, Index x, double r) { return density(s, to_set(e), x, r); });
  m.def("density_one_points", [](const Space& s, const std::vector<Index>& e, std::vector<double> scales, double eta) {
    return density_one_points(s, to_set(e), scales, eta).indices();
  });
  m.def("doubling_constant", [](const Space& s, std::vector<double> radii) { return doubling_constant(s, radii); });
  m.def("ball_average", [](const Space& s, std::vector<double> f, Index x, double r) { return ball_average(s, f, x, r); });
  m.def("sampling_resolution", &sampling_resolution);

  m.def("lipschitz_constant", [](const Space& s, std::vector<double> f, const std::vector<Index>& e) {
    return lipschitz_constant(s, std::span<const double>(f), to_set(e));
  });
  m.def(
      "mcshane_extend",
      [](const Space& s, std::vector<double> f, const std::vector<Index>& e) {
        return mcshane_extend(s, std::span<const double>(f), to_set(e));
      },
      "Extension of f|E to every point with the same Lipschitz constant; values off E are ignored.");

  py::class_<OrthoNet>(m, "OrthoNet")
      .def_property_readonly("k", &OrthoNet::dim)
      .def_property_readonly("delta", &OrthoNet::delta)
      .def_property_readonly("eps", &OrthoNet::eps)
      .def_property_readonly("separation", &OrthoNet::separation)
      .def_property_readonly("covering_radius", &OrthoNet::covering_radius)
      .def("__len__", &OrthoNet::size)
      .def("member", &OrthoNet::member)
      .def("snap_index", &OrthoNet::snap_index)
      .def("snap", [](const OrthoNet& n, const Matrix& t) { return Matrix(n.snap(t)); })
      .def("validate", [](const OrthoNet& n, std::size_t probes, std::uint64_t seed) {
        const NetValidation v = n.validate(probes, seed);
        return py::dict(py::arg("probes") = v.probes, py::arg("failures") = v.failures,
                        py::arg("max_distance") = v.max_distance);
      });
  m.def(
      "ortho_net",
      [](int k, double delta, std::uint64_t seed) {
        NetOptions o;
        o.seed = seed;
        return ortho_net(k, delta, o);
      },
      py::arg("k"), py::arg("delta"), py::arg("seed") = 1);

  py::class_<Chart>(m, "Chart")
      .def_readonly("k", &Chart::k)
      .def_readonly("phi", &Chart::phi)
      .def_readonly("eps", &Chart::eps)
      .def_readonly("comp", &Chart::comp)
      .def_property_readonly("domain", [](const Chart& c) { return c.domain.indices(); });

  py::class_<Fixture>(m, "Fixture")
      .def_readonly("space", &Fixture::space)
      .def_readonly("params", &Fixture::params)
      .def_property_readonly("charts", [](const Fixture& f) { return f.atlas.charts; })
      .def_property_readonly("true_bilip", [](const Fixture& f) {
        std::vector<double> b;
        for (const auto& c : f.truth.charts) b.push_back(c.bilip_factor);
        return b;
      })
      .def_property_readonly("doubling_constant", [](const Fixture& f) { return f.truth.doubling_constant; });
  m.def(
      "generate",
      [](const std::string& kind, std::size_t n, int k, double lip_g, std::vector<double> angles, std::uint64_t seed,
         bool lattice, const std::string& tower) {
        FixtureSpec s;
        s.kind = parse_fixture_kind(kind);
        s.n = n;
        s.k = k;
        s.lip_g = lip_g;
        s.angles = std::move(angles);
        s.seed = seed;
        s.lattice = lattice;
        s.tower = parse_graph_tower(tower);
        return generate(s);
      },
      py::arg("kind") = "euclidean_patch", py::arg("n") = 2000, py::arg("k") = 2, py::arg("lip_g") = 0.1,
      py::arg("angles") = std::vector<double>{}, py::arg("seed") = 1, py::arg("lattice") = false,
      py::arg("tower") = "shear");
  m.def("run_tower", &run_tower, py::arg("fixture"), py::arg("levels") = 4, py::arg("align") = true,
        py::arg("probes") = 10, py::arg("seed") = 1,
        "Candidate tower of the fixture (aligned when asked) with its contraction, norm and roundtrip statistics.");

  m.def("project_to_set", [](const Space& s, const std::vector<Index>& u, Index x) { return project_to_set(s, to_set(u), x); });
  m.def("blowup_map", [](const Fixture& f, Index x, Index y, double r) { return blowup_map(f.space, f.atlas, x, y, r); });
  m.def(
      "quasi_isometry_defect",
      [](const Fixture& f, Index base, double r, double window, double tolerance, std::size_t pair_budget, double grid_step) {
        BlowupConfig cfg;
        cfg.base = base;
        cfg.radii = {r};
        cfg.window = window;
        cfg.tolerance = tolerance;
        return defect_dict(quasi_isometry_defect(f.space, f.atlas, cfg, 0, pair_budget, grid_step));
      },
      py::arg("fixture"), py::arg("base"), py::arg("r"), py::arg("window") = 2.0, py::arg("tolerance") = 0.2,
      py::arg("pair_budget") = 200000, py::arg("grid_step") = 0.1);
}
