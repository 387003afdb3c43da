// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace ght {

using Index = std::size_t;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Base of every library-specific failure. Argument errors use the standard
// std::invalid_argument / std::out_of_range types instead.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A ball (or other measured set) required to have positive mass has none.
class EmptyBallError : public Error {
 public:
  using Error::Error;
};

// Two distinct indices at distance zero.
class InvalidSpaceError : public Error {
 public:
  using Error::Error;
};

// Chart coordinates collide on distinct points.
class NonInjectiveChartError : public Error {
 public:
  using Error::Error;
};

// Least-squares fit without k+1 neighbours in general position.
class RankDeficientError : public Error {
 public:
  using Error::Error;
};

// Fine domains not covered by the coarse atlas beyond the mass tolerance.
class RefinementError : public Error {
 public:
  using Error::Error;
};

// Orthogonal-group net failed its probe validation after all retries.
class NetCoverageError : public Error {
 public:
  using Error::Error;
};

// Inputs violating a documented precondition of an algorithm.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Post-align defect above the level tolerance.
class AlignmentBudgetError : public Error {
 public:
  using Error::Error;
};

// Composite differential whose conditioning exceeds the biLipschitz bound.
class ConditioningError : public Error {
 public:
  using Error::Error;
};

// Point outside every chart of the requested level.
class UncoveredPointError : public Error {
 public:
  using Error::Error;
};

// Sections living on incompatible fibres.
class FiberMismatchError : public Error {
 public:
  using Error::Error;
};

// Malformed, truncated or schema-incompatible file.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace ght
