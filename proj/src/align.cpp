// SPDX-License-Identifier: Apache-2.0
#include "ghtangent/align.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>

#include "ghtangent/differential.hpp"
#include "ghtangent/linalg.hpp"

namespace ght {

namespace {

double fit_radius_for(const Chart& chart, double h) {
  return h > 0.0 ? h : default_fit_radius(chart.phi);
}

std::string fmt_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::vector<Matrix> transition_differentials(const Chart& child, const Chart& parent, double h,
                                             unsigned threads) {
  child.check();
  parent.check();
  if (child.k != parent.k) throw std::invalid_argument("transition_differentials: dimension mismatch");
  if (!child.domain.is_subset_of(parent.domain))
    throw std::invalid_argument("transition_differentials: child domain is not inside the parent domain");
  const SampledMap tau(child.phi, parent.rows(child.domain));
  return tau.differentials(fit_radius_for(child, h), threads);
}

double alignment_defect(const Space& space, const Chart& child, const Chart& parent, double h) {
  space.check(child.domain);
  const auto a = transition_differentials(child, parent, h);
  const Matrix id = Matrix::Identity(child.k, child.k);
  double worst = 0.0;
  for (const auto& m : a) worst = std::max(worst, op_norm(id - m));
  return worst;
}

AlignResult align(const Space& space, const Atlas& prev, const Atlas& fine, double delta_n,
                  double net_resolution, const AlignOptions& options) {
  if (!(delta_n > 0.0) || !(net_resolution > 0.0))
    throw std::invalid_argument("align: tolerances must be positive");
  const Refinement ref = build_refinement(space, prev, fine, options.mass_tolerance);

  AlignResult out;
  out.atlas.level = fine.level;
  out.atlas.eps = fine.eps;
  out.atlas.delta = delta_n;
  out.uncovered = ref.uncovered;
  out.net_resolution = net_resolution;

  std::map<int, std::unique_ptr<OrthoNet>> nets;
  auto net_for = [&](int k) -> const OrthoNet& {
    auto& slot = nets[k];
    if (!slot) slot = std::make_unique<OrthoNet>(OrthoNet::build(k, net_resolution, options.net));
    return *slot;
  };

  std::map<std::size_t, std::vector<std::size_t>> split_children;
  for (std::size_t i = 0; i < ref.fine.charts.size(); ++i) {
    const Chart& child = ref.fine.charts[i];
    const std::size_t parent_idx = ref.tree.parent[i];
    const Chart& parent = prev.charts[parent_idx];
    const OrthoNet& net = net_for(child.k);
    if ((1.0 + parent.eps) * (1.0 + child.eps) > 1.0 + net.eps())
      throw PreconditionError("align: (1+eps_parent)(1+eps_child) exceeds 1 + net eps for candidate chart " +
                              std::to_string(ref.origin[i]));

    const double h = fit_radius_for(child, options.fit_radius);
    const auto a = transition_differentials(child, parent, h, options.threads);
    std::vector<std::size_t> snapped(a.size());
    for (std::size_t r = 0; r < a.size(); ++r) snapped[r] = net.snap_index(a[r]);

    std::map<std::size_t, std::vector<std::size_t>> cells;  // member -> rows
    for (std::size_t r = 0; r < a.size(); ++r) cells[snapped[r]].push_back(r);

    const Matrix id = Matrix::Identity(child.k, child.k);
    for (const auto& [member, rows] : cells) {
      const Matrix& t = net.member(member);
      std::vector<Index> pts;
      for (std::size_t r : rows) pts.push_back(child.domain[r]);
      Chart cell = compose(t, child.restrict_to(PointSet::from_sorted(pts)));

      AlignedChartInfo info;
      info.parent = parent_idx;
      info.member = member;
      const SampledMap refit(cell.phi, parent.rows(cell.domain));
      for (std::size_t c = 0; c < rows.size(); ++c) {
        const double predicted = op_norm(t - a[rows[c]]);
        info.net_term = std::max(info.net_term, predicted);
        if (auto fresh = refit.try_differential(c, h)) {
          const double measured = op_norm(id - *fresh);
          info.defect = std::max(info.defect, measured);
          info.estimation_term = std::max(info.estimation_term, std::abs(measured - predicted));
        } else {
          info.defect = std::max(info.defect, predicted);
          ++info.unestimated;
        }
      }
      split_children[ref.origin[i]].push_back(out.atlas.charts.size());
      out.atlas.charts.push_back(std::move(cell));
      out.tree.parent.push_back(parent_idx);
      out.defect = std::max(out.defect, info.defect);
      out.net_term = std::max(out.net_term, info.net_term);
      out.estimation_term = std::max(out.estimation_term, info.estimation_term);
      out.charts.push_back(info);
    }
  }
  for (auto& [origin, children] : split_children)
    if (children.size() > 1) out.tree.splits.push_back({origin, children});
  for (const auto& [k, net] : nets) out.net_size += net->size();

  out.within_budget = out.defect <= delta_n + 1e-12;
  if (options.enforce_budget && !out.within_budget)
    throw AlignmentBudgetError("align: level " + std::to_string(fine.level) + " defect " +
                               fmt_g(out.defect) + " exceeds delta " + fmt_g(delta_n));
  return out;
}

AlignedTower align_tower(const Space& space, const std::vector<Atlas>& candidates, const AlignOptions& options) {
  if (candidates.empty()) throw std::invalid_argument("align_tower: no levels");
  AlignedTower out;
  out.levels.push_back(candidates.front());
  for (std::size_t m = 1; m < candidates.size(); ++m) {
    const double delta = candidates[m].delta;
    AlignResult r = align(space, out.levels.back(), candidates[m], delta, delta, options);
    out.levels.push_back(r.atlas);
    out.trees.push_back(r.tree);
    out.steps.push_back(std::move(r));
  }
  return out;
}

}  // namespace ght
