// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <random>

#include "ghtangent/common.hpp"

namespace ght {

// Spectral norm; closed form for k <= 2.
double op_norm(const Matrix& m);
// Singular values, descending.
Vector singular_values(const Matrix& m);
// sigma_max / sigma_min; +inf when singular.
double condition_number(const Matrix& m);
// Orthogonal polar factor Q of m = Q P.
Matrix polar_factor(const Matrix& m);

Matrix rotation2(double theta);
// Rotation by theta in the (e_0, e_1) plane of R^k, identity elsewhere.
Matrix plane_rotation(int k, double theta);
// Haar-distributed element of O(k) (QR of a Gaussian with sign correction).
Matrix haar_orthogonal(int k, std::mt19937_64& rng);
// Orthogonality residual ||M^T M - I|| in operator norm.
double orthogonality_error(const Matrix& m);

}  // namespace ght
