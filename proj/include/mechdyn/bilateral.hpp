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

#include "mechdyn/markov.hpp"
#include "mechdyn/mdp.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

namespace mechdyn::bilateral {

using markov::DistributionVector;
using markov::StochasticMatrix;

/// Tail bound target for the infinite discounted series.
inline constexpr double kSeriesTolerance = 1e-10;
/// condition (*) counts as holding when slack >= -kHoldsTolerance.
inline constexpr double kHoldsTolerance = 1e-9;

/// Repeated bilateral trade of one unit per period. Seller and buyer types move
/// on the value grid v_1 < ... < v_K by their own chains.
class TradeModel
{
public:
  TradeModel(std::vector<double> values, StochasticMatrix seller, StochasticMatrix buyer, DistributionVector x,
             DistributionVector y, double discount);

  std::size_t                size() const { return values_.size(); }
  std::vector<double> const &values() const { return values_; }
  StochasticMatrix const    &seller() const { return seller_; }
  StochasticMatrix const    &buyer() const { return buyer_; }
  DistributionVector const  &x() const { return x_; }
  DistributionVector const  &y() const { return y_; }
  double                     discount() const { return discount_; }
  /// v_K - v_1, the largest per-period surplus.
  double span() const { return values_.back() - values_.front(); }

  TradeModel with_discount(double discount) const;
  /// Same chains and starts with every value multiplied by `factor` > 0.
  TradeModel scaled(double factor) const;

private:
  std::vector<double> values_;
  StochasticMatrix    seller_;
  StochasticMatrix    buyer_;
  DistributionVector  x_;
  DistributionVector  y_;
  double              discount_;
};

/// v_ij = v_j - v_i above the diagonal, zero elsewhere. Throws NotIncreasing.
Eigen::MatrixXd gap_matrix(std::vector<double> const &values);

/// Q^(t) = P_s^t V (P_b^t)^T.
Eigen::MatrixXd q_matrix(TradeModel const &model, unsigned long long t);

/// First T with delta^T (v_K - v_1) / (1 - delta) < tol. Requires delta < 1.
unsigned long long series_horizon(TradeModel const &model, double tol = kSeriesTolerance);

/// sum_{t<T} delta^t Q^(t), by doubling in O(log T) matrix products. delta may be 1.
Eigen::MatrixXd discounted_q_sum(TradeModel const &model, unsigned long long horizon, double discount);

struct BudgetReport
{
  double deficit{0.0};
  double seller_floor{0.0};
  double buyer_floor{0.0};
  /// seller_floor + buyer_floor - deficit
  double slack{0.0};
  bool   holds{false};
  /// Lump-sum fees split proportionally to the floors, present when holds.
  std::optional<double> fee_seller;
  std::optional<double> fee_buyer;
  /// Expected payoff of each starting type: e_k^T S y and x^T S e_k.
  Eigen::VectorXd    seller_payoffs;
  Eigen::VectorXd    buyer_payoffs;
  double             discount{0.0};
  unsigned long long horizon{0};
  /// Bound on the omitted tail of every series above; 0 for finite horizons.
  double tail_bound{0.0};
};

/// sum_t delta^t x^T Q^(t) y.
double deficit_series(TradeModel const &model, double tol = kSeriesTolerance);

struct PayoffFloors
{
  double seller{0.0};
  double buyer{0.0};
};

/// min_k sum_t delta^t e_k^T Q^(t) y and min_k sum_t delta^t x^T Q^(t) e_k.
PayoffFloors payoff_floors(TradeModel const &model, double tol = kSeriesTolerance);

/// Lump-sum fee feasibility: deficit <= seller floor + buyer floor.
BudgetReport condition_star(TradeModel const &model, double tol = kSeriesTolerance);

/// Partial sums over t < horizon. `discount` may equal 1 here.
BudgetReport finite_horizon_report(TradeModel const &model, unsigned long long horizon, double discount);

struct ThresholdPoint
{
  double discount{0.0};
  double slack{0.0};
  bool   holds{false};
};

struct ThresholdResult
{
  /// Smallest grid discount at which condition (*) holds.
  std::optional<double> threshold;
  /// False when some grid point above the first hold fails again.
  bool                        monotone{true};
  double                      grid_step{0.0};
  std::vector<ThresholdPoint> sweep;
};

/// Scans delta over {0, step, ..., 1 - step}. The template's own discount is ignored.
ThresholdResult delta_threshold(TradeModel const &model, double grid_step, double tol = kSeriesTolerance);

/// K = 2 only. True when all four diagonals are >= 1/2 and each player has one
/// diagonal strictly above 1/2; the two-period check then fails.
bool positively_correlated_impossible(StochasticMatrix const &seller, StochasticMatrix const &buyer);

/// Makes v_K absorbing for the seller (last row) and v_1 absorbing for the buyer
/// (first row); the remaining rows are taken from the supplied kernels.
TradeModel diverse_preference_model(std::vector<double> values, StochasticMatrix const &seller,
                                    StochasticMatrix const &buyer, DistributionVector x, DistributionVector y,
                                    double discount);

enum class Persistence
{
  independent,
  persistent,
};

/// Two periods, delta = 1, types uniform on [0, 1], by trapezoid quadrature
/// on grid_n + 1 nodes.
struct TwoPeriodReport
{
  std::size_t     grid_n{0};
  Persistence     persistence{Persistence::independent};
  Eigen::VectorXd grid;
  /// E[z_s^t] and E[z_b^t] for t = 0, 1.
  std::array<double, 2> expected_z_seller{};
  std::array<double, 2> expected_z_buyer{};
  double deficit_t0{0.0};
  double deficit_t1{0.0};
  double total_deficit{0.0};
  /// Expected total payoff at the start of period 0 for each initial own type.
  Eigen::VectorXd seller_payoff;
  Eigen::VectorXd buyer_payoff;
  /// Largest fee each side accepts: its worst type's payoff.
  double max_fee_seller{0.0};
  double max_fee_buyer{0.0};
  /// Deficit left after both maximal fees.
  double residual_deficit{0.0};
};

TwoPeriodReport uniform_two_period_report(std::size_t grid_n, Persistence persistence = Persistence::independent);

/// Two-player JointModel (seller = player 0) with actions 0 = no trade, 1 = trade,
/// v_s(theta, 1) = -theta, v_b(theta, 1) = theta and zero valuations without trade.
/// Trade is essential to both, so either side alone has zero welfare.
mdp::JointModel as_joint_model(TradeModel const &model);

}  // namespace mechdyn::bilateral
