// SPDX-License-Identifier: Apache-2.0
#include "ghtangent/ortho_net.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <unordered_map>

#include "ghtangent/linalg.hpp"

namespace ght {

namespace {

using Quat = std::array<double, 4>;

Quat quat_from_rotation(const Matrix& r) {
  Quat q;
  const double tr = r(0, 0) + r(1, 1) + r(2, 2);
  if (tr > 0.0) {
    const double s = std::sqrt(tr + 1.0) * 2.0;
    q = {0.25 * s, (r(2, 1) - r(1, 2)) / s, (r(0, 2) - r(2, 0)) / s, (r(1, 0) - r(0, 1)) / s};
  } else if (r(0, 0) > r(1, 1) && r(0, 0) > r(2, 2)) {
    const double s = std::sqrt(1.0 + r(0, 0) - r(1, 1) - r(2, 2)) * 2.0;
    q = {(r(2, 1) - r(1, 2)) / s, 0.25 * s, (r(0, 1) + r(1, 0)) / s, (r(0, 2) + r(2, 0)) / s};
  } else if (r(1, 1) > r(2, 2)) {
    const double s = std::sqrt(1.0 + r(1, 1) - r(0, 0) - r(2, 2)) * 2.0;
    q = {(r(0, 2) - r(2, 0)) / s, (r(0, 1) + r(1, 0)) / s, 0.25 * s, (r(1, 2) + r(2, 1)) / s};
  } else {
    const double s = std::sqrt(1.0 + r(2, 2) - r(0, 0) - r(1, 1)) * 2.0;
    q = {(r(1, 0) - r(0, 1)) / s, (r(0, 2) + r(2, 0)) / s, (r(1, 2) + r(2, 1)) / s, 0.25 * s};
  }
  double n = 0.0;
  for (double v : q) n += v * v;
  n = std::sqrt(n);
  for (double& v : q) v /= n;
  return q;
}

Matrix rotation_from_quat(const Quat& q) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Matrix r(3, 3);
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w),
      2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w),
      2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y);
  return r;
}

double dot(const Quat& a, const Quat& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3];
}

// |p.q| >= c  <=>  ||R_p - R_q|| <= r  for rotations, with c = sqrt(1 - r^2/4).
double dot_threshold(double op_radius) { return std::sqrt(std::max(0.0, 1.0 - 0.25 * op_radius * op_radius)); }

Matrix reflector(int k) {
  Matrix s = Matrix::Identity(k, k);
  s(k - 1, k - 1) = -1.0;
  return s;
}

}  // namespace

// Uniform grid over [-1,1]^4 holding every member quaternion q and -q, so a
// query only needs the canonical sign.
struct OrthoNet::QuatIndex {
  double cell = 1.0;
  std::vector<Quat> quats;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> cells;

  std::array<int, 4> coord(const Quat& q) const {
    std::array<int, 4> c;
    for (int i = 0; i < 4; ++i) c[i] = static_cast<int>(std::floor((q[i] + 1.0) / cell));
    return c;
  }
  static std::uint64_t key(const std::array<int, 4>& c) {
    std::uint64_t k = 0;
    for (int i = 0; i < 4; ++i) k = (k << 16) | static_cast<std::uint16_t>(c[i] + 1);
    return k;
  }
  void insert(const Quat& q) {
    const auto id = static_cast<std::uint32_t>(quats.size());
    quats.push_back(q);
    cells[key(coord(q))].push_back(id);
    const Quat m{-q[0], -q[1], -q[2], -q[3]};
    cells[key(coord(m))].push_back(id);
  }
  // Calls visit(id, |dot|) for members whose chordal box overlaps [q-r, q+r].
  template <class Visit>
  bool visit_near(const Quat& q, double chord, Visit&& visit) const {
    std::array<int, 4> lo, hi;
    for (int i = 0; i < 4; ++i) {
      lo[i] = static_cast<int>(std::floor((q[i] - chord + 1.0) / cell));
      hi[i] = static_cast<int>(std::floor((q[i] + chord + 1.0) / cell));
    }
    std::array<int, 4> c;
    for (c[0] = lo[0]; c[0] <= hi[0]; ++c[0])
      for (c[1] = lo[1]; c[1] <= hi[1]; ++c[1])
        for (c[2] = lo[2]; c[2] <= hi[2]; ++c[2])
          for (c[3] = lo[3]; c[3] <= hi[3]; ++c[3]) {
            auto it = cells.find(key(c));
            if (it == cells.end()) continue;
            for (std::uint32_t id : it->second)
              if (!visit(id, std::abs(dot(q, quats[id])))) return false;
          }
    return true;
  }
  std::size_t box_cells(double chord) const {
    const double span = std::floor(2.0 * chord / cell) + 2.0;
    return static_cast<std::size_t>(span * span * span * span);
  }
};

OrthoNet::OrthoNet(OrthoNet&&) noexcept = default;
OrthoNet& OrthoNet::operator=(OrthoNet&&) noexcept = default;
OrthoNet::~OrthoNet() = default;

Matrix OrthoNet::sample_probe(int k, double eps, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(1.0 / (1.0 + eps), 1.0 + eps);
  Vector s(k);
  for (int i = 0; i < k; ++i) s(i) = u(rng);
  const Matrix q1 = haar_orthogonal(k, rng);
  const Matrix q2 = haar_orthogonal(k, rng);
  return q1 * s.asDiagonal() * q2;
}

NetValidation OrthoNet::validate(std::size_t probes, std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  NetValidation v;
  v.probes = probes;
  for (std::size_t p = 0; p < probes; ++p) {
    const Matrix t = sample_probe(k_, eps(), rng);
    const double d = op_norm(t - snap(t));
    v.max_distance = std::max(v.max_distance, d);
    if (d > delta_) ++v.failures;
  }
  return v;
}

namespace {

// Vertices of the 600-cell (unit quaternions), identity first.
std::vector<Quat> cell600_vertices() {
  constexpr double phi = std::numbers::phi;
  std::vector<Quat> v;
  for (int i = 0; i < 4; ++i)
    for (double s : {1.0, -1.0}) {
      Quat q{0, 0, 0, 0};
      q[static_cast<std::size_t>(i)] = s;
      v.push_back(q);
    }
  for (int m = 0; m < 16; ++m)
    v.push_back({m & 1 ? -0.5 : 0.5, m & 2 ? -0.5 : 0.5, m & 4 ? -0.5 : 0.5, m & 8 ? -0.5 : 0.5});
  const std::array<double, 4> base{0.5 * phi, 0.5, 0.5 / phi, 0.0};
  std::array<int, 4> p{0, 1, 2, 3};
  do {
    int inversions = 0;
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) inversions += p[i] > p[j];
    if (inversions % 2) continue;
    for (int m = 0; m < 8; ++m) {
      Quat q{};
      for (int i = 0; i < 3; ++i) q[static_cast<std::size_t>(p[i])] = (m >> i & 1 ? -1.0 : 1.0) * base[i];
      q[static_cast<std::size_t>(p[3])] = 0.0;
      v.push_back(q);
    }
  } while (std::next_permutation(p.begin(), p.end()));
  return v;
}

// Tetrahedral cells as sorted vertex quadruples; neighbours sit at angle pi/5.
std::vector<std::array<int, 4>> cell600_cells(const std::vector<Quat>& v) {
  const double c = 0.5 * std::numbers::phi;
  const int n = static_cast<int>(v.size());
  std::vector<std::vector<char>> adj(v.size(), std::vector<char>(v.size(), 0));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) adj[a][b] = std::abs(dot(v[a], v[b]) - c) < 1e-9;
  std::vector<std::array<int, 4>> cells;
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      if (!adj[a][b]) continue;
      for (int cc = b + 1; cc < n; ++cc) {
        if (!adj[a][cc] || !adj[b][cc]) continue;
        for (int d = cc + 1; d < n; ++d)
          if (adj[a][d] && adj[b][d] && adj[cc][d]) cells.push_back({a, b, cc, d});
      }
    }
  return cells;
}

// Point of a cell with barycentric weights lam (summing to 1). sin-warped
// weights make the edges exact geodesic subdivisions; the sum runs in vertex
// order, so points shared by neighbouring cells come out bit-identical.
Quat cell_point(const std::vector<Quat>& v, const std::array<int, 4>& cell, const std::array<double, 4>& lam) {
  constexpr double theta = std::numbers::pi / 5.0;
  Quat q{0, 0, 0, 0};
  for (int i = 0; i < 4; ++i) {
    if (lam[static_cast<std::size_t>(i)] <= 0.0) continue;
    const double w = std::sin(lam[static_cast<std::size_t>(i)] * theta);
    for (int c = 0; c < 4; ++c) q[static_cast<std::size_t>(c)] += w * v[static_cast<std::size_t>(cell[i])][static_cast<std::size_t>(c)];
  }
  const double n = std::sqrt(dot(q, q));
  for (double& x : q) x /= n;
  return q;
}

template <class Fn>
void for_each_composition(int total, Fn&& fn) {
  for (int a = 0; a <= total; ++a)
    for (int b = 0; a + b <= total; ++b)
      for (int c = 0; a + b + c <= total; ++c) fn(std::array<int, 4>{a, b, c, total - a - b - c});
}

struct Refined600 {
  std::vector<Quat> points;  // one per rotation (q and -q identified)
  std::vector<Quat> holes;   // centres of the sub-simplices and octahedra
};

// Level-m barycentric refinement of the 600-cell: the lattice points
// a / m of every cell, an FCC-like arrangement on S^3.
Refined600 refine_600(int m) {
  const auto v = cell600_vertices();
  const auto cells = cell600_cells(v);
  std::vector<int> anti(v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = 0; j < v.size(); ++j)
      if (dot(v[i], v[j]) < -1.0 + 1e-9) anti[i] = static_cast<int>(j);

  // Key: support vertices ascending with their counts, 13 bits per entry.
  auto encode = [](std::vector<std::pair<int, int>> sup) {
    std::sort(sup.begin(), sup.end());
    std::uint64_t key = 0;
    for (const auto& [id, a] : sup) key = key << 13 | static_cast<std::uint64_t>(id) << 6 | static_cast<std::uint64_t>(a);
    return key << (13 * (4 - sup.size()));
  };
  std::map<std::uint64_t, Quat> pts;
  std::vector<Quat> vertices;
  for (const auto& cell : cells) {
    for_each_composition(m, [&](const std::array<int, 4>& a) {
      std::vector<std::pair<int, int>> sup, asup;
      for (int i = 0; i < 4; ++i)
        if (a[static_cast<std::size_t>(i)] > 0) {
          sup.push_back({cell[i], a[static_cast<std::size_t>(i)]});
          asup.push_back({anti[static_cast<std::size_t>(cell[i])], a[static_cast<std::size_t>(i)]});
        }
      const std::uint64_t key = encode(sup);
      if (key > encode(asup) || pts.count(key)) return;
      std::array<double, 4> lam;
      for (int i = 0; i < 4; ++i) lam[static_cast<std::size_t>(i)] = a[static_cast<std::size_t>(i)] / static_cast<double>(m);
      pts.emplace(key, cell_point(v, cell, lam));
    });
  }
  Refined600 out;
  // Original vertices first (the identity leads), then the rest by key.
  for (std::size_t i = 0; i < v.size(); ++i) {
    auto it = pts.find(encode({{static_cast<int>(i), m}}));
    if (it != pts.end()) {
      out.points.push_back(it->second);
      pts.erase(it);
    }
  }
  for (const auto& [key, q] : pts) out.points.push_back(q);

  const double fm = static_cast<double>(m);
  for (const auto& cell : cells) {
    auto add = [&](const std::array<int, 4>& a, const std::array<double, 4>& frac) {
      std::array<double, 4> lam;
      for (int i = 0; i < 4; ++i) lam[static_cast<std::size_t>(i)] = (a[static_cast<std::size_t>(i)] + frac[static_cast<std::size_t>(i)]) / fm;
      out.holes.push_back(cell_point(v, cell, lam));
    };
    for_each_composition(m - 1, [&](const std::array<int, 4>& a) { add(a, {0.25, 0.25, 0.25, 0.25}); });
    if (m >= 2)
      for_each_composition(m - 2, [&](const std::array<int, 4>& a) {
        add(a, {0.5, 0.5, 0.5, 0.5});
        for (int skip = 0; skip < 4; ++skip) {
          std::array<double, 4> f{2.0 / 3, 2.0 / 3, 2.0 / 3, 2.0 / 3};
          f[static_cast<std::size_t>(skip)] = 0.0;
          add(a, f);
        }
      });
  }
  return out;
}

double op_from_dot(double d) { return 2.0 * std::sqrt(std::max(0.0, 1.0 - d * d)); }

}  // namespace

OrthoNet OrthoNet::build(int k, double delta, const NetOptions& options) {
  if (k < 1) throw std::invalid_argument("ortho_net: k must be >= 1");
  if (!(delta > 0.0)) throw std::invalid_argument("ortho_net: delta must be positive");
  OrthoNet net;
  net.k_ = k;
  net.delta_ = delta;
  const Matrix s = reflector(k);
  // Rotations and reflections are exactly 2 apart, so the reflected family
  // is kept only when that exceeds delta.
  const bool reflections = delta < 2.0;
  // Members must stay apart beyond the snapping radius for snap to fix them.
  const double sep_floor = delta * (1.0 + kSnapSlack);

  // rho_proper: covering radius of the rotations within SO(k).
  auto finish = [&](std::vector<Matrix> proper, double sep_proper, double rho_proper, std::uint64_t seed) {
    net.n_proper_ = proper.size();
    net.members_ = std::move(proper);
    if (reflections)
      for (std::size_t i = 0; i < net.n_proper_; ++i) net.members_.push_back(net.members_[i] * s);
    net.sep_ = reflections && net.n_proper_ > 0 ? std::min(sep_proper, 2.0) : sep_proper;
    // Without the reflected family an improper T reaches a rotation through T S.
    net.rho_ = reflections ? rho_proper : rho_proper + 2.0;
    net.eps_ = std::min(0.25 * delta, delta - net.rho_);
    if (!(net.eps_ > 0.0)) return false;
    net.validation_ = net.validate(options.validation_probes, seed);
    return net.validation_.ok();
  };
  const double inf = std::numeric_limits<double>::infinity();

  if (k == 1) {
    if (finish({Matrix::Identity(1, 1)}, inf, 0.0, options.seed)) return net;
    throw NetCoverageError("ortho_net: k=1 net failed validation");
  }
  if (k == 2) {
    // Largest n whose angular spacing 2 pi / n keeps neighbours farther than delta.
    std::size_t n = 1;
    if (delta < 2.0) {
      n = static_cast<std::size_t>(std::floor(std::numbers::pi / std::asin(0.5 * delta))) + 1;
      while (n > 2 && !(2.0 * std::sin(std::numbers::pi / static_cast<double>(n)) > sep_floor)) --n;
      if (n == 2 && !(2.0 > sep_floor)) n = 1;
    }
    std::vector<Matrix> proper;
    for (std::size_t j = 0; j < n; ++j)
      proper.push_back(rotation2(2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n)));
    const double sep = n == 1 ? inf : 2.0 * std::sin(std::numbers::pi / static_cast<double>(n));
    const double rho = 2.0 * std::sin(std::numbers::pi / (2.0 * static_cast<double>(n)));
    if (finish(std::move(proper), sep, rho, options.seed)) return net;
    throw NetCoverageError("ortho_net: k=2 net cannot cover O^eps at delta " + std::to_string(delta));
  }

  if (k == 3) {
    const double c_delta = dot_threshold(delta);
    const double chord_delta = std::sqrt(std::max(0.0, 2.0 - 2.0 * c_delta));
    // Neighbour angle of level m is about pi / (5 m); take the finest level
    // whose members stay farther than delta apart.
    const int m_guess = delta >= 2.0 ? 1 : static_cast<int>(std::floor(std::numbers::pi / (5.0 * std::asin(0.5 * delta)))) + 1;
    if (m_guess > 40) throw std::invalid_argument("ortho_net: k=3 nets need delta >= 0.03");
    for (int m = m_guess; m >= 1; --m) {
      Refined600 ref = refine_600(m);
      auto index = std::make_unique<QuatIndex>();
      index->cell = std::max(chord_delta, 1e-3);
      for (const auto& q : ref.points) index->insert(q);
      double max_dot = 0.0;
      for (std::uint32_t id = 0; id < ref.points.size(); ++id)
        index->visit_near(ref.points[id], chord_delta, [&](std::uint32_t other, double d) {
          if (other != id) max_dot = std::max(max_dot, d);
          return true;
        });
      const double sep = max_dot > 0.0 ? op_from_dot(max_dot) : inf;
      if (!(sep > sep_floor) && ref.points.size() > 1) continue;

      // Covering radius: deepest hole over the sub-simplex centres plus Haar
      // samples, inflated by 2% for holes near cell seams.
      std::mt19937_64 rng(options.seed ^ 0x9e3779b97f4a7c15ULL);
      std::normal_distribution<double> g(0.0, 1.0);
      std::vector<Quat> probes;
      const std::size_t stride = std::max<std::size_t>(1, ref.holes.size() / 20000);
      for (std::size_t i = 0; i < ref.holes.size(); i += stride) probes.push_back(ref.holes[i]);
      for (int i = 0; i < 20000; ++i) {
        Quat q{g(rng), g(rng), g(rng), g(rng)};
        const double nq = std::sqrt(dot(q, q));
        for (double& x : q) x /= nq;
        probes.push_back(q);
      }
      const double reach = std::min(2.0, 1.5 * std::min(sep, 2.0));
      const double chord_reach = std::sqrt(std::max(0.0, 2.0 - 2.0 * dot_threshold(reach)));
      double rho = 0.0;
      for (const auto& q : probes) {
        double best = 0.0;
        index->visit_near(q, chord_reach, [&](std::uint32_t, double d) {
          best = std::max(best, d);
          return true;
        });
        rho = std::max(rho, op_from_dot(best));
      }
      rho *= 1.02;
      net.quat_ = std::move(index);
      std::vector<Matrix> proper;
      proper.reserve(ref.points.size());
      for (const auto& q : ref.points) proper.push_back(rotation_from_quat(q));
      if (finish(std::move(proper), sep, rho, options.seed)) return net;
      throw NetCoverageError("ortho_net: k=3 net at level " + std::to_string(m) + " failed validation (rho " +
                             std::to_string(rho) + ")");
    }
    throw NetCoverageError("ortho_net: no 600-cell refinement is delta-separated");
  }

  // k >= 4: randomized greedy over Haar rotations with strict separation
  // delta; the covering radius is estimated by sampling and inflated by 5%.
  std::mt19937_64 rng(options.seed);
  std::vector<Matrix> proper{Matrix::Identity(k, k)};
  // |A|_F / sqrt(k) <= |A|_op <= |A|_F: the SVD runs only when the bounds
  // straddle the current best.
  const double inv_sqrt_k = 1.0 / std::sqrt(static_cast<double>(k));
  auto nearest_proper = [&](const Matrix& t) {
    double best = inf;
    for (const auto& p : proper) {
      const double f = (t - p).norm();
      if (f * inv_sqrt_k >= best) continue;
      best = std::min(best, op_norm(t - p));
    }
    return best;
  };
  // Acceptance only needs to know whether some member is within sep_floor.
  auto has_close = [&](const Matrix& t) {
    for (const auto& p : proper) {
      const double f = (t - p).norm();
      if (f <= sep_floor) return true;
      if (f * inv_sqrt_k > sep_floor) continue;
      if (op_norm(t - p) <= sep_floor) return true;
    }
    return false;
  };
  double last_sep = inf, last_rho = inf;
  for (int round = 0; round <= options.max_retries; ++round) {
    const std::size_t factor = std::size_t{4} << (2 * round);
    std::size_t stall = 0;
    while (stall < factor * proper.size() + 1000) {
      Matrix m = haar_orthogonal(k, rng);
      if (m.determinant() < 0.0) m.col(k - 1) = -m.col(k - 1);
      const bool accept = !has_close(m);
      if (accept) proper.push_back(std::move(m));
      stall = accept ? 0 : stall + 1;
    }
    double sep = inf, rho = 0.0;
    for (std::size_t i = 0; i < proper.size(); ++i)
      for (std::size_t j = i + 1; j < proper.size(); ++j) sep = std::min(sep, op_norm(proper[i] - proper[j]));
    for (int i = 0; i < 2000; ++i) {
      Matrix m = haar_orthogonal(k, rng);
      if (m.determinant() < 0.0) m.col(k - 1) = -m.col(k - 1);
      rho = std::max(rho, nearest_proper(m));
    }
    last_sep = sep;
    last_rho = 1.05 * rho;
    if (finish(proper, sep, last_rho, options.seed + 1 + static_cast<std::uint64_t>(round))) return net;
  }
  // A random maximal packing leaves holes of depth close to its separation,
  // so rho rarely drops below delta - eps.
  throw NetCoverageError("ortho_net: k=" + std::to_string(k) + " greedy net failed validation after " +
                         std::to_string(options.max_retries + 1) + " rounds (separation " + std::to_string(last_sep) +
                         ", covering radius " + std::to_string(last_rho) + ", delta " + std::to_string(delta) + ")");
}

std::size_t OrthoNet::nearest_index(const Matrix& t) const {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < members_.size(); ++i) {
    const double d = op_norm(t - members_[i]);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

std::size_t OrthoNet::first_hit_linear(const Matrix& t) const {
  for (std::size_t i = 0; i < members_.size(); ++i)
    if (op_norm(t - members_[i]) <= hit_radius()) return i;
  return nearest_index(t);
}

std::size_t OrthoNet::snap_index(const Matrix& t) const {
  if (t.rows() != k_ || t.cols() != k_) throw std::invalid_argument("OrthoNet::snap: dimension mismatch");
  if (!quat_) return first_hit_linear(t);

  const Matrix q = polar_factor(t);
  const double ecc = op_norm(t - q);
  const double radius = hit_radius() + ecc;
  if (radius >= 2.0) return first_hit_linear(t);  // both families may be in range
  const bool proper = q.determinant() > 0.0;
  const Matrix rot = proper ? q : Matrix(q * reflector(3));
  const std::size_t offset = proper ? 0 : n_proper_;

  const double c = dot_threshold(radius) - 1e-12;
  const double chord = std::sqrt(std::max(0.0, 2.0 - 2.0 * c));
  if (quat_->box_cells(chord) > 4096) return first_hit_linear(t);
  std::vector<std::uint32_t> cand;
  quat_->visit_near(quat_from_rotation(rot), chord, [&](std::uint32_t id, double d) {
    if (d >= c) cand.push_back(id);
    return true;
  });
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
  for (std::uint32_t id : cand)
    if (op_norm(t - members_[offset + id]) <= hit_radius()) return offset + id;
  return nearest_index(t);
}

}  // namespace ght
