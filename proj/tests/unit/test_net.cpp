// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "doctest.h"
#include "ghtangent/linalg.hpp"
#include "ghtangent/ortho_net.hpp"

using namespace ght;

TEST_CASE("operator norm agrees with the SVD") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  for (int k = 1; k <= 4; ++k)
    for (int t = 0; t < 50; ++t) {
      Matrix m(k, k);
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
      Eigen::JacobiSVD<Matrix> svd(m);
      CHECK(op_norm(m) == doctest::Approx(svd.singularValues()(0)).epsilon(1e-12));
    }
  // Near-conformal 2x2 matrices: no cancellation loss.
  const double theta = 2.0 * std::asin(0.25);
  CHECK(std::abs(op_norm(Matrix::Identity(2, 2) - rotation2(theta)) - 0.5) <= 1e-15);
}

TEST_CASE("polar factor, condition and orthogonality") {
  Matrix m(2, 2);
  m << 2.0, 0.0, 0.0, 0.5;
  CHECK(condition_number(m) == doctest::Approx(4.0));
  const Matrix r = rotation2(0.7);
  CHECK((polar_factor(r * m) - r).norm() < 1e-12);
  CHECK(orthogonality_error(r) < 1e-15);
  CHECK(condition_number(Matrix::Zero(2, 2)) == std::numeric_limits<double>::infinity());
  const Matrix p = plane_rotation(3, 0.3);
  CHECK(p(2, 2) == 1.0);
  CHECK(p.topLeftCorner(2, 2).isApprox(rotation2(0.3)));
  std::mt19937_64 rng(2);
  for (int t = 0; t < 20; ++t) CHECK(orthogonality_error(haar_orthogonal(3, rng)) < 1e-12);
}

TEST_CASE("k=1 net is the sign pair") {
  const OrthoNet net = ortho_net(1, 0.5);
  REQUIRE(net.size() == 2);
  CHECK(net.member(0)(0, 0) == 1.0);
  CHECK(net.member(1)(0, 0) == -1.0);
  CHECK(net.snap(Matrix::Constant(1, 1, 0.9))(0, 0) == 1.0);
  CHECK(net.snap(Matrix::Constant(1, 1, -1.1))(0, 0) == -1.0);
  CHECK(net.eps() == doctest::Approx(0.125));
}

TEST_CASE("k=2 net spacing and reflections") {
  const double delta = 0.1;
  const OrthoNet net = ortho_net(2, delta);
  const std::size_t n = net.size() / 2;
  // n is maximal: one more member would bring neighbours within delta.
  CHECK(2.0 * std::sin(std::numbers::pi / static_cast<double>(n + 1)) <= net.hit_radius());
  // Neighbours stay farther than delta apart.
  CHECK(net.separation() > delta);
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(net.member(i).determinant() == doctest::Approx(1.0));
    CHECK(net.member(n + i).determinant() == doctest::Approx(-1.0));
  }
  CHECK(net.validation().ok());
  CHECK(net.validate(5000, 99).max_distance <= delta);
}

TEST_CASE("k=3 net covers probes and fixes members") {
  const double delta = 0.3;
  const OrthoNet net = ortho_net(3, delta);
  CHECK(net.separation() > delta);
  CHECK(net.covering_radius() < delta);
  CHECK(net.eps() > 0.0);
  CHECK(net.eps() <= delta / 4.0);
  const NetValidation v = net.validate(10000, 5);
  CHECK(v.failures == 0);
  for (std::size_t i = 0; i < net.size(); i += 7) {
    CHECK(net.snap_index(net.member(i)) == i);
    CHECK(orthogonality_error(net.member(i)) < 1e-10);
  }
  // Quaternion index and linear scan agree on the first hit.
  std::mt19937_64 rng(8);
  for (int t = 0; t < 200; ++t) {
    const Matrix p = OrthoNet::sample_probe(3, net.eps(), rng);
    const std::size_t got = net.snap_index(p);
    std::size_t want = net.size();
    for (std::size_t i = 0; i < net.size(); ++i)
      if (op_norm(p - net.member(i)) <= net.hit_radius()) {
        want = i;
        break;
      }
    CHECK(got == want);
  }
}

TEST_CASE("k=4 randomized net reports its covering radius") {
  // Greedy packings are delta-separated but their holes reach about delta,
  // leaving no room for eps = delta - rho.
  try {
    const OrthoNet net = ortho_net(4, 1.2, NetOptions{.seed = 3, .validation_probes = 500});
    CHECK(net.separation() > 1.2);
    CHECK(net.validation().ok());
  } catch (const NetCoverageError& e) {
    CHECK(std::string(e.what()).find("covering radius") != std::string::npos);
  }
}

TEST_CASE("probe samples lie in O^eps") {
  std::mt19937_64 rng(4);
  for (int k = 1; k <= 3; ++k)
    for (int t = 0; t < 100; ++t) {
      const Matrix p = OrthoNet::sample_probe(k, 0.05, rng);
      const Vector s = singular_values(p);
      CHECK(s(0) <= 1.05 + 1e-12);
      CHECK(s(s.size() - 1) >= 1.0 / 1.05 - 1e-12);
    }
}

TEST_CASE("net construction rejects invalid parameters") {
  CHECK_THROWS_AS(ortho_net(0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(ortho_net(2, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(ortho_net(3, 0.01), std::invalid_argument);
}
