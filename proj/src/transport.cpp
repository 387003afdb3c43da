// SPDX-License-Identifier: Apache-2.0
#include "ghtangent/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ghtangent/differential.hpp"
#include "ghtangent/linalg.hpp"

namespace ght {

ChartTransition chart_transition(const Chart& from, const Chart& to, double h) {
  from.check();
  to.check();
  ChartTransition t;
  t.shared = set_intersection(from.domain, to.domain);
  if (t.shared.empty()) throw std::invalid_argument("chart_transition: charts share no points");
  const RowMatrix src = from.rows(t.shared);
  const double radius = h > 0.0 ? h : default_fit_radius(src);
  t.a = SampledMap(src, to.rows(t.shared)).differentials(radius);
  return t;
}

namespace {

template <class Tag>
Eigen::RowVectorXd row_at(const ChartField<Tag>& f, Index x) {
  const auto pos = f.domain.position(x);
  if (!pos) throw std::invalid_argument("chart field does not cover the shared domain");
  return f.rows.row(static_cast<Eigen::Index>(*pos));
}

}  // namespace

ChartVectors push_section(const Chart& from, const Chart& to, const ChartVectors& v, double h) {
  if (v.rows.cols() != from.k) throw FiberMismatchError("push_section: vectors are not in source coordinates");
  const auto t = chart_transition(from, to, h);
  ChartVectors w{t.shared, RowMatrix(static_cast<Eigen::Index>(t.shared.size()), to.k)};
  for (std::size_t i = 0; i < t.shared.size(); ++i)
    w.rows.row(static_cast<Eigen::Index>(i)) = (t.a[i] * row_at(v, t.shared[i]).transpose()).transpose();
  return w;
}

ChartCovectors pull_form(const Chart& from, const Chart& to, const ChartCovectors& omega, double h) {
  if (omega.rows.cols() != to.k) throw FiberMismatchError("pull_form: covectors are not in target coordinates");
  const auto t = chart_transition(from, to, h);
  ChartCovectors out{t.shared, RowMatrix(static_cast<Eigen::Index>(t.shared.size()), from.k)};
  for (std::size_t i = 0; i < t.shared.size(); ++i)
    out.rows.row(static_cast<Eigen::Index>(i)) = row_at(omega, t.shared[i]) * t.a[i];
  return out;
}

std::vector<double> duality_defect(const Chart& from, const Chart& to, const ChartCovectors& omega,
                                   const ChartVectors& v, double h) {
  const auto pushed = push_section(from, to, v, h);
  const auto pulled = pull_form(from, to, omega, h);
  std::vector<double> out(pushed.domain.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const Index x = pushed.domain[i];
    const double lhs = row_at(omega, x).dot(pushed.rows.row(static_cast<Eigen::Index>(i)));
    const double rhs = pulled.rows.row(static_cast<Eigen::Index>(i)).dot(row_at(v, x));
    out[i] = std::abs(lhs - rhs);
  }
  return out;
}

ChainDefect chain_defect(const Chart& c0, const Chart& c1, const Chart& c2, const ChartVectors& v, double h) {
  const auto t01 = chart_transition(c0, c1, h);
  const auto t12 = chart_transition(c1, c2, h);
  const auto t02 = chart_transition(c0, c2, h);
  ChainDefect out;
  out.domain = set_intersection(set_intersection(c0.domain, c1.domain), c2.domain);
  if (out.domain.empty()) throw std::invalid_argument("chain_defect: charts share no points");
  for (Index x : out.domain) {
    const Vector vx = row_at(v, x).transpose();
    const Matrix& a01 = t01.a[*t01.shared.position(x)];
    const Matrix& a12 = t12.a[*t12.shared.position(x)];
    const Matrix& a02 = t02.a[*t02.shared.position(x)];
    out.defect.push_back((a02 * vx - a12 * (a01 * vx)).norm());
  }
  return out;
}

TransportPlan TransportPlan::build(const Space& space, std::vector<Atlas> levels, std::vector<RefinementTree> trees,
                                   const TransportOptions& options) {
  if (levels.empty()) throw std::invalid_argument("TransportPlan: no levels");
  if (trees.size() + 1 != levels.size()) throw std::invalid_argument("TransportPlan: need one tree per level above 0");
  const std::size_t n = space.size();
  TransportPlan plan;
  plan.weights_ = space.weights();
  plan.slack_ = options.condition_slack;
  plan.dims_.assign(n, 0);
  if (space.has_dim_label()) plan.dims_ = space.dim_label();

  const std::size_t L = levels.size();
  plan.step_.assign(L, std::vector<Matrix>(n));
  plan.comp_.assign(L, std::vector<Matrix>(n));
  plan.inv_.assign(L, std::vector<Matrix>(n));
  plan.bound_.assign(L, std::vector<double>(n, std::numeric_limits<double>::quiet_NaN()));
  plan.cond_.assign(L, std::vector<double>(n, std::numeric_limits<double>::quiet_NaN()));

  for (const auto& c : levels[0].charts) {
    c.check();
    for (Index x : c.domain) {
      space.check_index(x);
      plan.dims_[x] = c.k;
      plan.comp_[0][x] = Matrix::Identity(c.k, c.k);
      plan.inv_[0][x] = Matrix::Identity(c.k, c.k);
      plan.bound_[0][x] = 1.0;
      plan.cond_[0][x] = 1.0;
    }
  }
  for (std::size_t m = 1; m < L; ++m) {
    const Atlas& prev = levels[m - 1];
    const Atlas& cur = levels[m];
    const RefinementTree& tree = trees[m - 1];
    if (tree.parent.size() != cur.charts.size())
      throw std::invalid_argument("TransportPlan: tree size differs from chart count at level " + std::to_string(m));
    for (std::size_t c = 0; c < cur.charts.size(); ++c) {
      const Chart& child = cur.charts[c];
      const Chart& parent = prev.charts.at(tree.parent[c]);
      child.check();
      if (child.k != parent.k || !child.domain.is_subset_of(parent.domain))
        throw std::invalid_argument("TransportPlan: chart " + std::to_string(c) + " at level " + std::to_string(m) +
                                    " is not a refinement of its parent");
      const RowMatrix src = parent.rows(child.domain);
      const double h = options.fit_radius > 0.0 ? options.fit_radius : default_fit_radius(src);
      const auto a = SampledMap(src, child.phi).differentials(h, options.threads);
      const double level_bound = std::pow((1.0 + parent.eps) * (1.0 + child.eps), 2);
      for (std::size_t i = 0; i < child.size(); ++i) {
        const Index x = child.domain[i];
        if (plan.comp_[m - 1][x].size() == 0) continue;  // already exceptional
        plan.step_[m][x] = a[i];
        plan.comp_[m][x] = a[i] * plan.comp_[m - 1][x];
        plan.inv_[m][x] = plan.comp_[m][x].fullPivLu().inverse();
        plan.bound_[m][x] = plan.bound_[m - 1][x] * level_bound;
        plan.cond_[m][x] = condition_number(plan.comp_[m][x]);
      }
    }
  }
  plan.levels_ = std::move(levels);
  return plan;
}

void TransportPlan::require(std::size_t level, Index x) const {
  if (level >= levels()) throw std::out_of_range("TransportPlan: level out of range");
  if (x >= weights_.size()) throw std::out_of_range("TransportPlan: point out of range");
  if (comp_[level][x].size() == 0)
    throw UncoveredPointError("TransportPlan: point " + std::to_string(x) + " is exceptional at level " +
                              std::to_string(level));
}

const Matrix& TransportPlan::step(std::size_t level, Index x) const {
  if (level == 0) throw std::out_of_range("TransportPlan: level 0 has no step");
  require(level, x);
  return step_[level][x];
}

const Matrix& TransportPlan::composite(std::size_t level, Index x) const {
  require(level, x);
  return comp_[level][x];
}

const Matrix& TransportPlan::composite_inverse(std::size_t level, Index x) const {
  require(level, x);
  return inv_[level][x];
}

double TransportPlan::condition_bound(std::size_t level, Index x) const {
  require(level, x);
  return bound_[level][x];
}

PointSet TransportPlan::exceptional(std::size_t level) const {
  if (level >= levels()) throw std::out_of_range("TransportPlan: level out of range");
  std::vector<Index> out;
  for (Index x = 0; x < weights_.size(); ++x)
    if (comp_[level][x].size() == 0) out.push_back(x);
  return PointSet::from_sorted(std::move(out));
}

double TransportPlan::exceptional_mass(std::size_t level) const {
  double m = 0.0;
  for (Index x : exceptional(level)) m += weights_[x];
  return m;
}

std::size_t TransportPlan::conditioning_violations(std::size_t level) const {
  if (level >= levels()) throw std::out_of_range("TransportPlan: level out of range");
  std::size_t bad = 0;
  for (Index x = 0; x < weights_.size(); ++x)
    if (comp_[level][x].size() != 0 && cond_[level][x] > bound_[level][x] * (1.0 + slack_)) ++bad;
  return bad;
}

namespace {

void check_plan_fibers(const TransportPlan& plan, const Section& v) {
  if (v.size() != plan.fiber_dims().size()) throw FiberMismatchError("section size differs from plan size");
  for (Index x = 0; x < v.size(); ++x)
    if (v[x].size() != plan.fiber_dims()[x])
      throw FiberMismatchError("section fibre dimension mismatch at point " + std::to_string(x));
}

}  // namespace

Section iso_step(const TransportPlan& plan, const Section& v0, std::size_t n) {
  if (n >= plan.levels()) throw std::out_of_range("iso_step: level out of range");
  check_plan_fibers(plan, v0);
  std::vector<Vector> out(v0.size());
  for (Index x = 0; x < v0.size(); ++x)
    out[x] = plan.covered(n, x) ? Vector(plan.composite(n, x) * v0[x]) : Vector::Zero(v0[x].size());
  return Section(std::move(out));
}

Section iso_inverse(const TransportPlan& plan, const Section& w, std::size_t n) {
  if (n >= plan.levels()) throw std::out_of_range("iso_inverse: level out of range");
  check_plan_fibers(plan, w);
  if (plan.conditioning_violations(n) > 0)
    throw ConditioningError("iso_inverse: composite differential at level " + std::to_string(n) +
                            " exceeds its biLipschitz conditioning bound");
  std::vector<Vector> out(w.size());
  for (Index x = 0; x < w.size(); ++x)
    out[x] = plan.covered(n, x) ? Vector(plan.composite_inverse(n, x) * w[x]) : Vector::Zero(w[x].size());
  return Section(std::move(out));
}

double roundtrip_error(const TransportPlan& plan, const Section& v0, std::size_t n) {
  const Section back = iso_inverse(plan, iso_step(plan, v0, n), n);
  double worst = 0.0;
  for (Index x = 0; x < v0.size(); ++x)
    if (plan.covered(n, x)) worst = std::max(worst, (back[x] - v0[x]).norm());
  return worst;
}

std::vector<ContractionRow> contraction_profile(const TransportPlan& plan, std::span<const Section> probes,
                                                std::size_t n) {
  if (n >= plan.levels()) throw std::out_of_range("contraction_profile: level out of range");
  for (const auto& p : probes) check_plan_fibers(plan, p);
  const auto& w = plan.weights();
  std::vector<ContractionRow> rows;
  for (std::size_t m = 0; m < n; ++m) {
    ContractionRow row;
    row.level = m;
    row.bound = std::ldexp(1.0, -static_cast<int>(m));
    row.exceptional_mass = plan.exceptional_mass(m + 1);
    for (Index x = 0; x < w.size(); ++x) {
      if (!plan.covered(m + 1, x)) continue;
      const Matrix& d0 = plan.composite(m, x);
      const Matrix& d1 = plan.composite(m + 1, x);
      const Matrix& a = plan.step(m + 1, x);
      row.pointwise = std::max(row.pointwise, op_norm(d1 - d0));
      row.chain_bound = std::max(
          row.chain_bound, op_norm(a - Matrix::Identity(a.rows(), a.cols())) * op_norm(d0));
    }
    for (const auto& v : probes) {
      double num = 0.0, den = 0.0;
      for (Index x = 0; x < w.size(); ++x) {
        if (!plan.covered(m + 1, x)) continue;
        num += w[x] * ((plan.composite(m + 1, x) - plan.composite(m, x)) * v[x]).squaredNorm();
        den += w[x] * v[x].squaredNorm();
      }
      if (!(den > 0.0)) continue;
      ++row.probes_used;
      row.empirical = std::max(row.empirical, std::sqrt(num / den));
    }
    rows.push_back(row);
  }
  return rows;
}

NormDeviation norm_preservation(const TransportPlan& plan, const Section& v0, std::size_t n) {
  const Section out = iso_step(plan, v0, n);
  double vmax = 0.0;
  for (Index x = 0; x < v0.size(); ++x) vmax = std::max(vmax, v0[x].norm());
  const double floor = 1e-12 * vmax;
  NormDeviation dev;
  dev.deviation.assign(v0.size(), std::numeric_limits<double>::quiet_NaN());
  for (Index x = 0; x < v0.size(); ++x) {
    if (!plan.covered(n, x)) continue;
    const double a = v0[x].norm();
    const double denom = std::max(a, floor);
    dev.deviation[x] = denom > 0.0 ? std::abs(out[x].norm() - a) / denom : 0.0;
    dev.max = std::max(dev.max, dev.deviation[x]);
  }
  return dev;
}

}  // namespace ght
