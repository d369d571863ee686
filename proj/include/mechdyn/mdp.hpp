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

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <vector>

namespace mechdyn::mdp {

using markov::DistributionVector;
using markov::StochasticMatrix;

/// Index of a joint type profile in a ProfileSpace.
using ProfileIndex = std::size_t;
using ActionIndex  = std::size_t;

/// Mixed-radix enumeration of joint profiles. Player 0 is the most significant digit.
/// A space over zero players has exactly one (empty) profile.
class ProfileSpace
{
public:
  ProfileSpace() = default;
  explicit ProfileSpace(std::vector<std::size_t> radices);

  std::size_t players() const { return radices_.size(); }
  std::size_t size() const { return size_; }
  std::size_t types(std::size_t player) const { return radices_[player]; }

  ProfileIndex             encode(std::vector<std::size_t> const &types) const;
  std::vector<std::size_t> decode(ProfileIndex profile) const;
  std::size_t              type_of(ProfileIndex profile, std::size_t player) const;
  /// Same profile with `player`'s type replaced.
  ProfileIndex with_type(ProfileIndex profile, std::size_t player, std::size_t type) const;
  /// Index of the profile of everyone but `player`, in the space without that player.
  ProfileIndex without(ProfileIndex profile, std::size_t player) const;
  ProfileSpace without_player(std::size_t player) const;

private:
  std::vector<std::size_t> radices_;
  std::vector<std::size_t> strides_;
  std::size_t              size_{1};
};

struct PlayerSpec
{
  /// valuation[type][action], in money.
  std::vector<std::vector<double>> valuation;
  /// transitions[action] is the kernel over own next types; one entry per action.
  std::vector<StochasticMatrix> transitions;
  /// Actions that need this player, e.g. trade needs both sides. The planner
  /// without the player cannot choose them.
  std::vector<ActionIndex> essential;

  std::size_t types() const { return valuation.size(); }
};

/// Finite multi-player dynamic environment with independent private type chains.
class JointModel
{
public:
  /// Validates dimensions, the valuation bound and 0 <= discount < 1.
  /// When `bound` is empty it is taken as max |v|.
  JointModel(std::vector<PlayerSpec> players, std::size_t actions, double discount,
             std::optional<double> bound = std::nullopt);

  std::size_t         players() const { return players_.size(); }
  std::size_t         actions() const { return actions_; }
  double              discount() const { return discount_; }
  double              bound() const { return bound_; }
  PlayerSpec const   &player(std::size_t i) const { return players_[i]; }
  /// False for actions that need a player missing from this environment.
  bool available(ActionIndex a) const { return available_[a]; }
  ProfileSpace const &profiles() const { return space_; }

  double valuation(std::size_t player, std::size_t type, ActionIndex a) const
  {
    return players_[player].valuation[type][a];
  }
  /// Sum of valuations at a joint profile.
  double welfare(ProfileIndex profile, ActionIndex a) const;
  /// Sum of valuations of everyone but `player`.
  double others_welfare(ProfileIndex profile, ActionIndex a, std::size_t player) const;

  /// Environment of the remaining players. Their kernels do not involve the dropped
  /// player's type, so the restriction is exact.
  JointModel without_player(std::size_t player) const;

  /// Copy with a different discount factor.
  JointModel with_discount(double discount) const;

private:
  std::vector<PlayerSpec> players_;
  std::size_t             actions_;
  double                  discount_;
  double                  bound_;
  ProfileSpace            space_;
  std::vector<bool>       available_;
};

struct StationaryPolicy
{
  std::vector<ActionIndex> action;

  ActionIndex operator()(ProfileIndex profile) const { return action[profile]; }
  std::size_t size() const { return action.size(); }
};

struct ValueTable
{
  Eigen::VectorXd value;

  double      operator[](ProfileIndex profile) const { return value(static_cast<Eigen::Index>(profile)); }
  std::size_t size() const { return static_cast<std::size_t>(value.size()); }
  double      sup_norm() const { return value.size() ? value.cwiseAbs().maxCoeff() : 0.0; }
};

struct SolverOptions
{
  /// Target sup-norm error of the welfare table against the Bellman fixed point.
  double      tolerance{1e-10};
  std::size_t max_iterations{1'000'000};
};

struct EfficientSolution
{
  StationaryPolicy policy;
  ValueTable       welfare;
  std::size_t      iterations{0};
  /// Sup-norm Bellman residual of (policy, welfare).
  double residual{0.0};
};

/// p(theta' | theta, a) as a product of the players' kernel rows.
DistributionVector joint_kernel(JointModel const &model, ProfileIndex profile, ActionIndex a);

/// |Theta| x |Theta| transition matrix when action a is taken everywhere.
Eigen::MatrixXd action_transition(JointModel const &model, ActionIndex a);

/// |Theta| x |Theta| transition matrix under a stationary policy.
Eigen::MatrixXd policy_transition(JointModel const &model, StationaryPolicy const &policy);

/// Solves V = r + delta * P_policy V exactly.
ValueTable evaluate(JointModel const &model, StationaryPolicy const &policy, Eigen::VectorXd const &reward);

/// Outcome-efficient stationary policy and the social welfare table.
///
/// Value iteration runs until successive iterates differ by less than
/// tol * (1 - delta) / (2 * delta), which bounds the error against the fixed point by
/// tol. The greedy policy is then polished by policy iteration with exact linear
/// evaluation, so the returned table is the policy's exact value. Ties go to the
/// lowest action index. Throws NonConvergence when the iteration cap is hit.
EfficientSolution solve_efficient(JointModel const &model, SolverOptions const &options = {});

/// Efficient policy and welfare of everyone but `player`, over the reduced profile space.
EfficientSolution solve_excluding(JointModel const &model, std::size_t player, SolverOptions const &options = {});

ValueTable player_value(JointModel const &model, StationaryPolicy const &policy, std::size_t player);
ValueTable others_value(JointModel const &model, StationaryPolicy const &policy, std::size_t player);

/// v_i(theta_i, a) + delta * E[V_i(theta') | theta, a], with the policy followed afterwards.
double continuation_value(JointModel const &model, ValueTable const &player_values, std::size_t player,
                          ProfileIndex profile, ActionIndex a);
double continuation_value(JointModel const &model, StationaryPolicy const &policy, std::size_t player,
                          ProfileIndex profile, ActionIndex a);

/// max over theta of |W(theta) - max_a (sum_j v_j + delta E[W])|.
double bellman_residual(JointModel const &model, ValueTable const &welfare);

}  // namespace mechdyn::mdp
