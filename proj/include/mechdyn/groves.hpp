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

#include "mechdyn/mdp.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace mechdyn::groves {

using mdp::JointModel;
using mdp::ProfileIndex;
using mdp::StationaryPolicy;

/// Stationary transfers paid by each player. `flow[i]` is the per-period payment
/// z_i(theta); `total[i]` solves Z_i = z_i + delta * E[Z_i(theta') | theta, policy].
struct TransferRule
{
  std::vector<Eigen::VectorXd> flow;
  std::vector<Eigen::VectorXd> total;

  std::size_t players() const { return flow.size(); }
};

/// Builds a rule from per-period payments; totals by exact linear solve.
TransferRule transfers_from_flow(JointModel const &model, StationaryPolicy const &policy,
                                 std::vector<Eigen::VectorXd> flow);

/// Builds a rule from target totals with z_i = Z_i - delta * E[Z_i(theta') | theta, policy].
TransferRule transfers_from_total(JointModel const &model, StationaryPolicy const &policy,
                                  std::vector<Eigen::VectorXd> total);

/// Dynamic Groves transfers Z_i = -V_{-i} + Phi_i(theta_{-i}). `phi[i]` is indexed by
/// the profile of everyone but i (see ProfileSpace::without).
TransferRule groves_transfers(JointModel const &model, StationaryPolicy const &policy,
                              std::vector<Eigen::VectorXd> const &phi);

struct PivotMechanism
{
  mdp::EfficientSolution              efficient;
  /// Planner solution without player i, over the reduced profile space.
  std::vector<mdp::EfficientSolution> excluded;
  TransferRule                        transfers;
};

/// Groves member with Phi_i = W_{-i}: each player's total payoff is W - W_{-i}.
PivotMechanism pivot_mechanism(JointModel const &model, mdp::SolverOptions const &options = {});
TransferRule   pivot_transfers(JointModel const &model, mdp::SolverOptions const &options = {});

/// One-shot misreport: `player` with true profile `truth` reports `report_type`.
struct Deviation
{
  std::size_t  player{0};
  ProfileIndex truth{0};
  std::size_t  report_type{0};
};

struct ICReport
{
  double    max_gain{0.0};
  Deviation worst_case;
  /// per_state_gains(i, theta): best misreport gain of player i at true profile theta; -inf with no alternative type
  Eigen::MatrixXd per_state_gains;
  double          tolerance{0.0};
  bool            passed{false};
};

/// Exhaustive one-shot deviation search against truthful continuation.
ICReport verify_periodic_ic(JointModel const &model, StationaryPolicy const &policy, TransferRule const &transfers,
                            double tolerance);

/// Gain of a single deviation. The successor distribution is driven by the true
/// profile and the action chosen on the report.
double deviation_gain(JointModel const &model, StationaryPolicy const &policy, TransferRule const &transfers,
                      std::vector<mdp::ValueTable> const &player_values, Deviation const &deviation);

/// Largest violation of Z_i(t_i, t_-i) - Z_i(s_i, t_-i) = V_-i(s_i, t_-i) - V_-i(t_i, t_-i).
double verify_property_a(JointModel const &model, StationaryPolicy const &policy, TransferRule const &transfers);

/// Phi_i(theta) := Z_i(theta) + V_-i(theta) over the full profile space; constant in
/// theta_i exactly when the rule has the Groves form.
Eigen::VectorXd recovered_phi(JointModel const &model, StationaryPolicy const &policy, TransferRule const &transfers,
                              std::size_t player);

/// Flow budget deficit -sum_i z_i(theta). Positive means the mechanism pays out.
double budget_flow(TransferRule const &transfers, ProfileIndex profile);

/// E[sum_t delta^t deficit(theta^t)] with theta^0 drawn from `initial` over joint profiles.
double expected_discounted_deficit(JointModel const &model, StationaryPolicy const &policy,
                                   TransferRule const &transfers, Eigen::VectorXd const &initial);

/// Truthful total payoff V_i(theta) - Z_i(theta) of every profile.
Eigen::VectorXd truthful_payoff(JointModel const &model, StationaryPolicy const &policy, TransferRule const &transfers,
                                std::size_t player);

}  // namespace mechdyn::groves
