// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include "ghtangent/common.hpp"

namespace ght {

struct NetOptions {
  std::uint64_t seed = 0x6a09e667f3bcc909ULL;
  std::size_t validation_probes = 10000;
  int max_retries = 3;  // k >= 4 greedy rounds, each with a longer rejection run
};

struct NetValidation {
  std::size_t probes = 0;
  std::size_t failures = 0;
  double max_distance = 0.0;  // max ||T - snap(T)|| over probes
  bool ok() const { return failures == 0; }
};

// Finite delta-net of O(k). Members are ordered proper rotations first, then
// their reflections M S with S = diag(1, ..., 1, -1), and are pairwise farther
// than delta apart, so snap fixes every member. With rho the covering radius
// of the rotations, the net covers O^eps(k) = {T : ||T||, ||T^-1|| <= 1 + eps}
// for eps = min(delta / 4, delta - rho).
class OrthoNet {
 public:
  static OrthoNet build(int k, double delta, const NetOptions& options = {});

  int dim() const { return k_; }
  double delta() const { return delta_; }
  double eps() const { return eps_; }
  // Upper bound on the distance from any element of O(k) to the nearest member
  // (exact for k <= 2, certified by hole enumeration and sampling for k = 3).
  double covering_radius() const { return rho_; }
  // Smallest pairwise member distance (+inf for a single member).
  double separation() const { return sep_; }
  std::size_t size() const { return members_.size(); }
  const std::vector<Matrix>& members() const { return members_; }
  const Matrix& member(std::size_t i) const { return members_.at(i); }
  const NetValidation& validation() const { return validation_; }

  // Snapping accepts members within delta (1 + kSnapSlack), so transitions
  // planted at distance exactly delta resolve consistently under rounding.
  static constexpr double kSnapSlack = 1e-9;
  double hit_radius() const { return delta_ * (1.0 + kSnapSlack); }

  // First member (in member order) within hit_radius() of t; the nearest member if
  // none is, which only happens for t outside O^eps.
  std::size_t snap_index(const Matrix& t) const;
  const Matrix& snap(const Matrix& t) const { return members_[snap_index(t)]; }

  NetValidation validate(std::size_t probes, std::uint64_t seed) const;
  // Random element of O^eps(k): Q1 diag(s) Q2 with s_i in [1/(1+eps), 1+eps].
  static Matrix sample_probe(int k, double eps, std::mt19937_64& rng);

  OrthoNet(OrthoNet&&) noexcept;
  OrthoNet& operator=(OrthoNet&&) noexcept;
  ~OrthoNet();

 private:
  struct QuatIndex;
  OrthoNet() = default;
  std::size_t nearest_index(const Matrix& t) const;
  std::size_t first_hit_linear(const Matrix& t) const;

  int k_ = 0;
  double delta_ = 0.0;
  double eps_ = 0.0;
  double rho_ = 0.0;
  double sep_ = 0.0;
  std::vector<Matrix> members_;
  std::size_t n_proper_ = 0;
  NetValidation validation_;
  std::unique_ptr<QuatIndex> quat_;
};

inline OrthoNet ortho_net(int k, double delta, const NetOptions& options = {}) {
  return OrthoNet::build(k, delta, options);
}

}  // namespace ght
