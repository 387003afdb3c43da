// SPDX-License-Identifier: Apache-2.0
// ghtangent: batch pipelines over synthetic rectifiable spaces.
//
//   ghtangent gen       --config c.json --out dir   fixture, level-0 atlas, candidate tower
//   ghtangent align     --config c.json --out dir   aligned tower + align_defects.csv
//   ghtangent transport --config c.json --out dir   contraction.csv + norm.csv
//   ghtangent blowup    --config c.json --out dir   blowup.csv
//
// Later stages read what earlier stages wrote into --out. Every stage writes
// manifest_<stage>.json with the FNV-1a hash of the resolved config and of
// each output file. The exit status is 1 when an assertion of the stage
// fails and 2 on usage, input or library errors.
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ghtangent/align.hpp"
#include "ghtangent/blowup.hpp"
#include "ghtangent/chart.hpp"
#include "ghtangent/common.hpp"
#include "ghtangent/fixtures.hpp"
#include "ghtangent/io.hpp"
#include "ghtangent/tangent.hpp"
#include "ghtangent/transport.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace ght;

namespace {

// Allowance for rounding in comparisons against exact closed forms.
constexpr double kRound = 1e-12;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Resolved pipeline configuration. Unknown top-level keys are rejected so a
// typo cannot silently fall back to a default.
struct PipelineConfig {
  FixtureSpec fixture;
  std::size_t levels = 4;
  double fit_radius = 0.0;     // <= 0: per-chart default
  double probe_radius = 0.1;   // density probes in gen's chart validation
  double eta = 0.05;           // uncovered mass fraction tolerated by refinement
  std::size_t probes = 20;     // transport probe sections
  std::vector<std::vector<double>> bases;  // blow-up base points, ambient coordinates
  double r0 = 0.05;
  double ratio = 0.9;
  double window = 2.0;
  double tolerance = 0.2;
  double grid_step = 0.1;
  std::size_t pair_budget = 200000;
  unsigned threads = 1;  // not part of the hash: outputs do not depend on it

  json to_json() const {
    json j;
    j["fixture"] = json::parse(io::fixture_spec_to_string(fixture));
    j["levels"] = levels;
    j["tolerances"] = {{"fit_radius", fit_radius}, {"probe_radius", probe_radius}, {"eta", eta}};
    j["transport"] = {{"probes", probes}};
    j["blowup"] = {{"bases", bases},         {"r0", r0},       {"ratio", ratio},
                   {"window", window},       {"tolerance", tolerance},
                   {"grid_step", grid_step}, {"pair_budget", pair_budget}};
    return j;
  }

  void check() const {
    fixture.check();
    if (levels < 1 || levels > 12) throw UsageError("levels must lie in [1, 12]");
    if (!(probe_radius > 0.0) || !(eta > 0.0) || eta >= 1.0) throw UsageError("tolerances must be positive");
    if (!(r0 > 0.0) || !(ratio > 0.0) || ratio >= 1.0) throw UsageError("blowup radii need r0 > 0 and 0 < ratio < 1");
    if (!(tolerance > 0.0) || !(window > tolerance)) throw UsageError("blowup needs 0 < tolerance < window");
    if (!(grid_step > 0.0) || probes == 0 || pair_budget == 0) throw UsageError("counts and steps must be positive");
  }
};

template <class T>
void take(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : keys) known = known || it.key() == k;
    if (!known) throw UsageError("unknown key '" + it.key() + "' in " + where);
  }
}

PipelineConfig load_config(const std::optional<fs::path>& path) {
  PipelineConfig c;
  if (!path) return c;
  if (!fs::exists(*path)) throw UsageError("config not found: " + path->string());
  const json j = json::parse(io::read_text(*path));
  try {
    reject_unknown(j, {"fixture", "levels", "tolerances", "transport", "blowup"}, "config");
    if (j.contains("fixture")) c.fixture = io::fixture_spec_from_string(j.at("fixture").dump());
    take(j, "levels", c.levels);
    if (j.contains("tolerances")) {
      const json& t = j.at("tolerances");
      reject_unknown(t, {"fit_radius", "probe_radius", "eta"}, "tolerances");
      take(t, "fit_radius", c.fit_radius);
      take(t, "probe_radius", c.probe_radius);
      take(t, "eta", c.eta);
    }
    if (j.contains("transport")) {
      reject_unknown(j.at("transport"), {"probes"}, "transport");
      take(j.at("transport"), "probes", c.probes);
    }
    if (j.contains("blowup")) {
      const json& b = j.at("blowup");
      reject_unknown(b, {"bases", "r0", "ratio", "window", "tolerance", "grid_step", "pair_budget"}, "blowup");
      take(b, "bases", c.bases);
      take(b, "r0", c.r0);
      take(b, "ratio", c.ratio);
      take(b, "window", c.window);
      take(b, "tolerance", c.tolerance);
      take(b, "grid_step", c.grid_step);
      take(b, "pair_budget", c.pair_budget);
    }
  } catch (const json::exception& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  return c;
}

// Collects outputs and assertion outcomes, then writes the manifest.
class Stage {
 public:
  Stage(std::string name, fs::path out, const PipelineConfig& cfg) : name_(std::move(name)), out_(std::move(out)) {
    fs::create_directories(out_);
    const std::string text = cfg.to_json().dump();
    manifest_["stage"] = name_;
    manifest_["schema_version"] = io::kSchemaVersion;
    manifest_["config"] = cfg.to_json();
    manifest_["config_hash"] = hex64(fnv1a(text));
    manifest_["files"] = json::array();
    manifest_["assertions"] = json::array();
  }

  fs::path path(const std::string& file) const { return out_ / file; }

  void wrote(const std::string& file) {
    manifest_["files"].push_back({{"name", file}, {"fnv1a", hex64(fnv1a(io::read_text(path(file))))}});
  }
  void text(const std::string& file, const std::string& body) {
    io::write_text(path(file), body);
    wrote(file);
  }
  void csv(const std::string& file, const io::CsvTable& t) {
    t.save(path(file));
    wrote(file);
  }

  void assert_that(bool ok, const std::string& what) {
    manifest_["assertions"].push_back({{"check", what}, {"pass", ok}});
    if (!ok) {
      failed_ = true;
      std::cerr << name_ << ": assertion failed: " << what << "\n";
    }
  }

  json& info() { return manifest_; }

  int finish() {
    manifest_["pass"] = !failed_;
    io::write_text(path("manifest_" + name_ + ".json"), manifest_.dump(2) + "\n");
    std::cout << name_ << ": " << (failed_ ? "FAIL" : "ok") << " (" << out_.string() << ")\n";
    return failed_ ? 1 : 0;
  }

 private:
  std::string name_;
  fs::path out_;
  json manifest_;
  bool failed_ = false;
};

std::string level_file(const char* stem, std::size_t m) { return std::string(stem) + "_" + std::to_string(m) + ".json"; }

fs::path need(const fs::path& p) {
  if (!fs::exists(p)) throw UsageError("missing input " + p.string() + " (run the earlier stage first)");
  return p;
}

// Atlases stem_0..stem_L and trees tree_stem_1..tree_stem_L from dir.
void load_tower(const fs::path& dir, const char* atlas_stem, const char* tree_stem, std::size_t levels,
                std::vector<Atlas>& atlases, std::vector<RefinementTree>& trees) {
  for (std::size_t m = 0; m <= levels; ++m) atlases.push_back(io::load_atlas(need(dir / level_file(atlas_stem, m))));
  for (std::size_t m = 1; m <= levels; ++m) trees.push_back(io::load_tree(need(dir / level_file(tree_stem, m))));
}

// ---------------------------------------------------------------------------
int cmd_gen(const PipelineConfig& cfg, const fs::path& out) {
  Stage st("gen", out, cfg);
  const Fixture fx = generate(cfg.fixture);
  st.text("fixture.json", io::fixture_spec_to_string(cfg.fixture));
  io::save_space(st.path("space.json"), fx.space);
  st.wrote("space.json");

  json charts = json::array();
  for (std::size_t c = 0; c < fx.atlas.charts.size(); ++c) {
    const Chart& ch = fx.atlas.charts[c];
    const ChartReport r = validate_chart(fx.space, ch, cfg.probe_radius);
    charts.push_back({{"index", c},
                      {"k", ch.k},
                      {"points", ch.size()},
                      {"eps", ch.eps},
                      {"comp", ch.comp},
                      {"true_bilip", fx.truth.charts[c].bilip_factor},
                      {"measured_bilip", r.bilip.factor()}});
    st.assert_that(r.eps_ok, "level-0 chart " + std::to_string(c) + " is (1+eps)-biLipschitz on sampled pairs");
  }
  st.info()["charts"] = charts;
  st.info()["truth"] = fx.truth.description;
  if (fx.truth.doubling_constant) st.info()["doubling_constant"] = *fx.truth.doubling_constant;

  const AtlasTower tower = make_atlas_tower(fx, cfg.levels);
  io::CsvTable planted({"level", "chart", "planted_defect", "delta"});
  for (std::size_t m = 0; m < tower.levels.size(); ++m) {
    const std::string f = level_file("candidate", m);
    io::save_atlas(st.path(f), tower.levels[m]);
    st.wrote(f);
    if (m > 0) {
      const std::string t = level_file("candidate_tree", m);
      io::save_tree(st.path(t), tower.trees[m - 1]);
      st.wrote(t);
    }
    for (std::size_t c = 0; c < tower.planted_defects[m].size(); ++c)
      planted.row().add(m).add(c).add(tower.planted_defects[m][c]).add(tower.levels[m].delta);
  }
  st.csv("planted_defects.csv", planted);
  st.info()["candidate_tower_aligned"] = tower.aligned;
  return st.finish();
}

// planted[level][chart] from gen's planted_defects.csv, if present.
std::optional<std::vector<std::vector<double>>> read_planted(const fs::path& p) {
  if (!fs::exists(p)) return std::nullopt;
  std::istringstream in(io::read_text(p));
  std::string line;
  std::getline(in, line);  // header
  std::vector<std::vector<double>> out;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string level, chart, value;
    if (!std::getline(row, level, ',') || !std::getline(row, chart, ',') || !std::getline(row, value, ','))
      throw FormatError("planted_defects.csv: malformed row '" + line + "'");
    const auto m = static_cast<std::size_t>(std::stoul(level)), c = static_cast<std::size_t>(std::stoul(chart));
    if (out.size() <= m) out.resize(m + 1);
    if (out[m].size() <= c) out[m].resize(c + 1, 0.0);
    out[m][c] = std::stod(value);
  }
  return out;
}

// ---------------------------------------------------------------------------
int cmd_align(const PipelineConfig& cfg, const fs::path& out) {
  const Space space = io::load_space(need(out / "space.json"));
  std::vector<Atlas> cand;
  for (std::size_t m = 0; m <= cfg.levels; ++m) cand.push_back(io::load_atlas(need(out / level_file("candidate", m))));

  Stage st("align", out, cfg);
  AlignOptions opt;
  opt.fit_radius = cfg.fit_radius;
  opt.mass_tolerance = cfg.eta;
  opt.enforce_budget = false;  // an over-budget level becomes a failing row
  opt.threads = cfg.threads;
  // In candidate mode net_term holds the fitted defect.
  io::CsvTable t({"level", "mode", "delta", "net_resolution", "net_size", "charts", "defect", "net_term",
                  "estimation_term", "uncovered_points", "within_budget"});
  const auto save_level = [&](std::size_t m, const Atlas& atlas, const RefinementTree* tree) {
    io::save_atlas(st.path(level_file("atlas", m)), atlas);
    st.wrote(level_file("atlas", m));
    if (tree) {
      io::save_tree(st.path(level_file("tree", m)), *tree);
      st.wrote(level_file("tree", m));
    }
  };

  std::optional<AlignedTower> a;
  try {
    a = align_tower(space, cand, opt);
  } catch (const PreconditionError& e) {
    // Charts too coarse for the net: the candidate tower must already be
    // aligned, and its measured defects are checked level by level.
    st.info()["align_precondition"] = e.what();
  }
  if (a) {
    st.info()["mode"] = "aligned";
    save_level(0, a->levels[0], nullptr);
    for (std::size_t m = 1; m < a->levels.size(); ++m) {
      const AlignResult& r = a->steps[m - 1];
      save_level(m, a->levels[m], &a->trees[m - 1]);
      t.row().add(m).add("aligned").add(cand[m].delta).add(r.net_resolution).add(r.net_size).add(r.atlas.charts.size())
          .add(r.defect).add(r.net_term).add(r.estimation_term).add(r.uncovered.size()).add(r.within_budget ? 1 : 0);
      st.assert_that(r.within_budget, "alignment defect <= delta_n at level " + std::to_string(m));
    }
  } else {
    // Plants sit at delta_n, so the check uses the closed-form defects from
    // gen when present; the fitted defect and its gap are reported next to it.
    st.info()["mode"] = "candidate";
    const auto planted = read_planted(out / "planted_defects.csv");
    save_level(0, cand[0], nullptr);
    for (std::size_t m = 1; m <= cfg.levels; ++m) {
      const RefinementTree tree = io::load_tree(need(out / level_file("candidate_tree", m)));
      double fitted = 0.0, exact = 0.0, gap = 0.0;
      for (std::size_t c = 0; c < cand[m].charts.size(); ++c) {
        const double d = alignment_defect(space, cand[m].charts[c], cand[m - 1].charts[tree.parent.at(c)],
                                          cfg.fit_radius);
        fitted = std::max(fitted, d);
        if (planted) {
          const double p = planted->at(m).at(c);
          exact = std::max(exact, p);
          gap = std::max(gap, std::abs(d - p));
        }
      }
      const double defect = planted ? exact : fitted;
      const bool ok = defect <= cand[m].delta + kRound;
      save_level(m, cand[m], &tree);
      t.row().add(m).add("candidate").add(cand[m].delta).add(std::nan("")).add(std::size_t{0})
          .add(cand[m].charts.size()).add(defect).add(fitted).add(planted ? gap : std::nan("")).add(std::size_t{0})
          .add(ok ? 1 : 0);
      st.assert_that(ok, std::string(planted ? "planted" : "fitted") + " candidate defect <= delta_n at level " +
                             std::to_string(m));
    }
  }
  st.csv("align_defects.csv", t);
  return st.finish();
}

// ---------------------------------------------------------------------------
int cmd_transport(const PipelineConfig& cfg, const fs::path& out) {
  const Space space = io::load_space(need(out / "space.json"));
  std::vector<Atlas> levels;
  std::vector<RefinementTree> trees;
  load_tower(out, "atlas", "tree", cfg.levels, levels, trees);

  Stage st("transport", out, cfg);
  TransportOptions opt;
  opt.fit_radius = cfg.fit_radius;
  opt.threads = cfg.threads;
  const TransportPlan plan = TransportPlan::build(space, levels, std::move(trees), opt);
  std::vector<Section> probes;
  for (std::size_t i = 0; i < cfg.probes; ++i) probes.push_back(random_section(plan.fiber_dims(), cfg.fixture.seed * 7919 + i));

  io::CsvTable c({"level", "bound", "empirical", "pointwise", "chain_bound", "exceptional_mass", "probes_used", "pass"});
  for (const ContractionRow& r : contraction_profile(plan, probes, cfg.levels)) {
    const bool ok = r.empirical <= 1.1 * r.bound;
    c.row().add(r.level).add(r.bound).add(r.empirical).add(r.pointwise).add(r.chain_bound).add(r.exceptional_mass)
        .add(r.probes_used).add(ok ? 1 : 0);
    st.assert_that(ok, "contraction ratio <= 1.1 * 2^-m at m=" + std::to_string(r.level));
  }
  st.csv("contraction.csv", c);

  io::CsvTable nt({"level", "eps", "norm_deviation", "norm_bound", "roundtrip_error", "conditioning_violations",
                   "exceptional_mass", "pass"});
  for (std::size_t n = 0; n <= cfg.levels; ++n) {
    double dev = 0.0, trip = 0.0;
    bool conditioned = true;
    for (const Section& v : probes) {
      dev = std::max(dev, norm_preservation(plan, v, n).max);
      try {
        trip = std::max(trip, roundtrip_error(plan, v, n));
      } catch (const ConditioningError&) {
        conditioned = false;
      }
    }
    // I_0 is the identity; later levels may stretch norms by the chart factors.
    const double eps = n == 0 ? 0.0 : plan.atlas(n).eps;
    const double bound = std::pow(1.0 + eps, 2) - 1.0;
    const bool ok = conditioned && dev <= bound + kRound && trip <= 1e-10;
    nt.row().add(n).add(eps).add(dev).add(bound).add(conditioned ? trip : std::nan("")).add(plan.conditioning_violations(n))
        .add(plan.exceptional_mass(n)).add(ok ? 1 : 0);
    st.assert_that(conditioned, "J_n defined within the conditioning bound at n=" + std::to_string(n));
    st.assert_that(dev <= bound + kRound, "norm deviation <= (1+eps_n)^2-1 at n=" + std::to_string(n));
    st.assert_that(!conditioned || trip <= 1e-10, "roundtrip error <= 1e-10 at n=" + std::to_string(n));
  }
  st.csv("norm.csv", nt);
  return st.finish();
}

// ---------------------------------------------------------------------------
Index nearest_point(const Space& space, const std::vector<double>& at) {
  const RowMatrix& x = space.coords();
  if (static_cast<Eigen::Index>(at.size()) > x.cols())
    throw UsageError("blowup base point has more coordinates than the space");
  Index best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < space.size(); ++i) {
    double d = 0.0;
    for (std::size_t c = 0; c < at.size(); ++c) d += std::pow(x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) - at[c], 2);
    if (d < bd) {
      bd = d;
      best = i;
    }
  }
  return best;
}

int cmd_blowup(const PipelineConfig& cfg, const fs::path& out) {
  const Space space = io::load_space(need(out / "space.json"));
  std::vector<Atlas> levels;
  std::vector<RefinementTree> trees;
  load_tower(out, "atlas", "tree", cfg.levels, levels, trees);
  if (!space.has_coords()) throw UsageError("blowup base points need a coordinate-backed space");

  Stage st("blowup", out, cfg);
  std::vector<Index> bases;
  if (cfg.bases.empty()) {
    const Eigen::RowVectorXd mean = space.coords().colwise().mean();
    bases.push_back(nearest_point(space, std::vector<double>(mean.data(), mean.data() + mean.size())));
  }
  for (const auto& b : cfg.bases) bases.push_back(nearest_point(space, b));

  io::CsvTable t({"base_point", "n", "r_n", "distortion", "coverage_gap", "pairs_used", "grid_points", "covered",
                  "empty_ball", "exhaustive", "eps_bar", "distortion_bound"});
  json summary = json::array();
  for (Index x : bases) {
    BlowupConfig bc;
    bc.base = x;
    bc.window = cfg.window;
    bc.tolerance = cfg.tolerance;
    for (std::size_t n = 0; n <= cfg.levels; ++n) bc.radii.push_back(cfg.r0 * std::pow(cfg.ratio, static_cast<double>(n)));
    const auto recs = blowup_sweep(space, levels, bc, cfg.pair_budget, cfg.grid_step, cfg.fixture.seed);
    for (const DefectRecord& r : recs) {
      const bool measured = r.covered && !r.empty_ball;
      // The chart containing x fixes eps_n; uncovered rows are flagged only.
      double eps_n = levels[r.n].eps;
      const auto owners = levels[r.n].owners(space.size());
      if (owners[x] >= 0) eps_n = levels[r.n].charts[static_cast<std::size_t>(owners[x])].eps;
      const double bound = measured ? distortion_bound(cfg.window, eps_n, r.eps_bar) : std::nan("");
      t.row().add(static_cast<std::size_t>(x)).add(r.n).add(r.r).add(r.distortion).add(r.coverage_gap).add(r.pairs_used)
          .add(r.grid_points).add(r.covered ? 1 : 0).add(r.empty_ball ? 1 : 0).add(r.exhaustive ? 1 : 0).add(r.eps_bar)
          .add(bound);
      if (measured)
        st.assert_that(r.distortion <= bound + kRound, "distortion within the displayed bound at base " + std::to_string(x) +
                                                  ", n=" + std::to_string(r.n));
    }
    const auto n0 = first_converged_level(recs, cfg.tolerance);
    summary.push_back({{"base_point", x}, {"n0", n0 ? json(*n0) : json(nullptr)}});
  }
  st.csv("blowup.csv", t);
  st.info()["convergence"] = summary;
  return st.finish();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ghtangent: charts, aligned atlases, tangent transport and blow-ups on point clouds"};
  app.require_subcommand(1);

  std::optional<std::string> config_path;
  std::string out_dir = "ght_out";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> levels;
  unsigned threads = 1;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "pipeline config (JSON)");
    sub->add_option("--out", out_dir, "output directory")->capture_default_str();
    sub->add_option("--seed", seed, "override the fixture seed");
    sub->add_option("--levels", levels, "override the number of tower levels");
    sub->add_option("--threads", threads, "worker threads")->check(CLI::Range(1u, 256u))->capture_default_str();
  };
  CLI::App* gen = app.add_subcommand("gen", "generate the fixture, its level-0 atlas and the candidate tower");
  CLI::App* align = app.add_subcommand("align", "align the candidate tower and report per-level defects");
  CLI::App* transport = app.add_subcommand("transport", "run I_n / J_n over probe sections");
  CLI::App* blowup = app.add_subcommand("blowup", "blow-up defect sweeps over base points and levels");
  for (CLI::App* s : {gen, align, transport, blowup}) add_common(s);

  CLI11_PARSE(app, argc, argv);

  try {
    PipelineConfig cfg = load_config(config_path ? std::optional<fs::path>(*config_path) : std::nullopt);
    if (seed) cfg.fixture.seed = *seed;
    if (levels) cfg.levels = *levels;
    cfg.threads = threads;
    cfg.check();
    const fs::path out(out_dir);
    if (gen->parsed()) return cmd_gen(cfg, out);
    if (align->parsed()) return cmd_align(cfg, out);
    if (transport->parsed()) return cmd_transport(cfg, out);
    return cmd_blowup(cfg, out);
  } catch (const UsageError& e) {
    std::cerr << "ghtangent: " << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "ghtangent: error: " << e.what() << "\n";
  }
  return 2;
}
