// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ghtangent/chart.hpp"
#include "ghtangent/space.hpp"

namespace ght {

enum class FixtureKind { kEuclideanPatch, kLipschitzGraph, kRotatedPatches, kMixedDimension, kPiecewiseRotation };

std::string to_string(FixtureKind kind);
FixtureKind parse_fixture_kind(const std::string& name);

// Perturbation used by lipschitz_graph towers.
enum class GraphTower { kShear, kDilation };
std::string to_string(GraphTower t);
GraphTower parse_graph_tower(const std::string& name);

struct FixtureSpec {
  FixtureKind kind = FixtureKind::kEuclideanPatch;
  int k = 2;
  std::size_t n = 2000;
  double lip_g = 0.1;
  std::vector<double> angles;  // radians; kind-specific defaults when empty
  std::uint64_t seed = 1;
  bool lattice = false;  // regular grid instead of uniform samples
  GraphTower tower = GraphTower::kShear;

  // Throws std::invalid_argument outside the documented ranges.
  void check() const;
};

struct ChartTruth {
  double bilip_factor = 1.0;
  std::string transition;  // closed-form description relative to the parameter coordinates
};

struct GroundTruth {
  std::vector<ChartTruth> charts;          // aligned with the level-0 atlas
  std::optional<double> doubling_constant;  // interior value where a closed form exists
  std::string description;
};

struct Fixture {
  FixtureSpec spec;
  Space space;
  Atlas atlas;  // level 0
  GroundTruth truth;
  RowMatrix params;       // parameter u of each point (unused columns zero)
  std::vector<int> dims;  // parameter dimension of each point
};

// Parameters u live in [0,1]^k with uniform weight 1/N per component, so the
// pushforward density under the parameter chart is 1.
Fixture generate(const FixtureSpec& spec);

struct TowerOptions {
  std::size_t max_depth = 4;  // domains stop bisecting at 2^max_depth cells
};

struct AtlasTower {
  std::vector<Atlas> levels;
  std::vector<RefinementTree> trees;                 // trees[m-1]: level m -> level m-1
  std::vector<std::vector<double>> planted_defects;  // [level][chart]; ||Id - d tau|| in closed form
  bool aligned = true;                               // false for candidate towers that still need align
};

// Levels 0..n_levels with eps_n = delta_n = 2^-n.
AtlasTower make_atlas_tower(const Fixture& fixture, std::size_t n_levels, const TowerOptions& options = {});

}  // namespace ght
