// Copyright 2026 The mechdyn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace mechdyn::markov {

/// Tolerance applied to row sums and probability masses at construction.
inline constexpr double kMassTolerance = 1e-12;

/// Probability vector over K states. Entries are nonnegative and sum to one.
class DistributionVector
{
public:
  /// Throws InvalidArgument if the mass is not a probability vector within kMassTolerance.
  explicit DistributionVector(Eigen::VectorXd mass);
  explicit DistributionVector(std::vector<double> const &mass);

  static DistributionVector uniform(std::size_t k);
  static DistributionVector point_mass(std::size_t k, std::size_t state);

  std::size_t            size() const { return static_cast<std::size_t>(mass_.size()); }
  double                 operator[](std::size_t i) const { return mass_(static_cast<Eigen::Index>(i)); }
  Eigen::VectorXd const &vector() const { return mass_; }

  /// Builds a vector without validation. Used for results of exact products whose
  /// rounding drift is the caller's concern.
  static DistributionVector unchecked(Eigen::VectorXd mass);

private:
  struct Unchecked
  {
  };
  DistributionVector(Eigen::VectorXd mass, Unchecked);

  Eigen::VectorXd mass_;
};

/// Row-stochastic K x K matrix: entry (i, j) is the probability of moving from i to j.
class StochasticMatrix
{
public:
  /// Throws InvalidArgument naming the first offending row.
  explicit StochasticMatrix(Eigen::MatrixXd entries);
  explicit StochasticMatrix(std::vector<std::vector<double>> const &rows);

  static StochasticMatrix identity(std::size_t k);
  static StochasticMatrix uniform(std::size_t k);
  /// [[a, 1-a], [1-a, a]]
  static StochasticMatrix symmetric_two_state(double stay);

  std::size_t            dim() const { return static_cast<std::size_t>(p_.rows()); }
  double                 operator()(std::size_t i, std::size_t j) const;
  Eigen::MatrixXd const &matrix() const { return p_; }
  DistributionVector     row(std::size_t i) const;

  static StochasticMatrix unchecked(Eigen::MatrixXd entries);

private:
  struct Unchecked
  {
  };
  StochasticMatrix(Eigen::MatrixXd entries, Unchecked);

  Eigen::MatrixXd p_;
};

struct ChainClass
{
  bool irreducible{false};
  /// Every strongly connected component that carries a cycle has period one.
  bool aperiodic{false};
};

/// P^t by binary exponentiation; P^0 is the identity.
StochasticMatrix mat_power(StochasticMatrix const &p, unsigned long long t);

/// Unique stationary distribution, solved from (P^T - I) mu = 0 with the last
/// equation replaced by sum(mu) = 1. Throws NotUnique when the chain has more than
/// one closed class. A chain with a single closed class plus transient states has a
/// unique stationary distribution and it is returned (zero on transient states).
DistributionVector stationary_distribution(StochasticMatrix const &p);

ChainClass classify_chain(StochasticMatrix const &p);

/// Strongly connected components of the positive-entry graph, in Tarjan order.
std::vector<std::vector<std::size_t>> communicating_classes(StochasticMatrix const &p);

/// Components with no positive transition leaving them.
std::vector<std::vector<std::size_t>> closed_classes(StochasticMatrix const &p);

/// Period of the component containing `state` (0 when the component has no cycle).
std::size_t period(StochasticMatrix const &p, std::size_t state);

}  // namespace mechdyn::markov
