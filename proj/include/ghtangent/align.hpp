// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "ghtangent/chart.hpp"
#include "ghtangent/ortho_net.hpp"

namespace ght {

// Differentials of tau = parent ∘ child^-1 at every child point (rows in
// child-domain order). h <= 0 selects default_fit_radius(child.phi).
std::vector<Matrix> transition_differentials(const Chart& child, const Chart& parent, double h,
                                             unsigned threads = 1);

// max over child points of ||Id - d tau||.
double alignment_defect(const Space& space, const Chart& child, const Chart& parent, double h = 0.0);

struct AlignOptions {
  double fit_radius = 0.0;  // <= 0: per-chart default
  double mass_tolerance = 0.05;
  bool enforce_budget = true;  // throw AlignmentBudgetError when defect > delta_n
  unsigned threads = 1;
  NetOptions net;
};

struct AlignedChartInfo {
  std::size_t parent = 0;
  std::size_t member = 0;  // index of the snapped net member T
  double defect = 0.0;
  double net_term = 0.0;         // max ||T - d tau|| from the candidate fit
  double estimation_term = 0.0;  // max |re-fitted defect - net_term| on the output cell
  std::size_t unestimated = 0;   // points where the cell was too small to re-fit
};

struct AlignResult {
  Atlas atlas;
  RefinementTree tree;
  PointSet uncovered;
  std::vector<AlignedChartInfo> charts;
  double net_resolution = 0.0;
  std::size_t net_size = 0;
  double defect = 0.0;
  double net_term = 0.0;
  double estimation_term = 0.0;
  bool within_budget = false;
};

// Aligns the candidate level against prev: refine, snap each transition
// differential to the net, partition by snapped member and compose.
AlignResult align(const Space& space, const Atlas& prev, const Atlas& fine, double delta_n,
                  double net_resolution, const AlignOptions& options = {});

struct AlignedTower {
  std::vector<Atlas> levels;  // levels[0] is the first candidate unchanged
  std::vector<RefinementTree> trees;
  std::vector<AlignResult> steps;  // steps[m-1] produced levels[m]
};

// Aligns candidates[m] against the aligned level m-1 for m >= 1, with
// delta_m and the net resolution both taken from candidates[m].delta.
AlignedTower align_tower(const Space& space, const std::vector<Atlas>& candidates, const AlignOptions& options = {});

}  // namespace ght
