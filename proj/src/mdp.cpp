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

#include "mechdyn/mdp.hpp"

#include "mechdyn/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mechdyn::mdp {

namespace {

constexpr std::size_t kPolicyIterationCap = 10'000;

// Two actions whose Q-values differ by less than this are treated as tied.
double tie_tolerance(Eigen::VectorXd const &w)
{
  double const scale = w.size() ? w.cwiseAbs().maxCoeff() : 0.0;
  return 1e-12 * (1.0 + scale);
}

struct Operators
{
  std::vector<Eigen::MatrixXd> transition;  // per action
  std::vector<Eigen::VectorXd> reward;      // per action
  std::vector<bool>            available;   // per action
};

Operators build_operators(JointModel const &model)
{
  Operators   ops;
  auto const  n = static_cast<Eigen::Index>(model.profiles().size());
  for (ActionIndex a = 0; a < model.actions(); ++a)
  {
    ops.transition.push_back(action_transition(model, a));
    Eigen::VectorXd r(n);
    for (Eigen::Index s = 0; s < n; ++s)
    {
      r(s) = model.welfare(static_cast<ProfileIndex>(s), a);
    }
    ops.reward.push_back(std::move(r));
    ops.available.push_back(model.available(a));
  }
  return ops;
}

Eigen::MatrixXd q_values(Operators const &ops, double discount, Eigen::VectorXd const &w)
{
  Eigen::MatrixXd q(w.size(), static_cast<Eigen::Index>(ops.reward.size()));
  for (std::size_t a = 0; a < ops.reward.size(); ++a)
  {
    if (ops.available[a])
    {
      q.col(static_cast<Eigen::Index>(a)) = ops.reward[a] + discount * (ops.transition[a] * w);
    }
    else
    {
      q.col(static_cast<Eigen::Index>(a)).setConstant(-std::numeric_limits<double>::infinity());
    }
  }
  return q;
}

// Lowest action index whose Q-value is within `tie` of the row maximum.
StationaryPolicy greedy(Eigen::MatrixXd const &q, double tie)
{
  StationaryPolicy policy;
  policy.action.resize(static_cast<std::size_t>(q.rows()));
  for (Eigen::Index s = 0; s < q.rows(); ++s)
  {
    double const best = q.row(s).maxCoeff();
    for (Eigen::Index a = 0; a < q.cols(); ++a)
    {
      if (q(s, a) >= best - tie)
      {
        policy.action[static_cast<std::size_t>(s)] = static_cast<ActionIndex>(a);
        break;
      }
    }
  }
  return policy;
}

Eigen::VectorXd policy_reward(Operators const &ops, StationaryPolicy const &policy)
{
  Eigen::VectorXd r(static_cast<Eigen::Index>(policy.size()));
  for (std::size_t s = 0; s < policy.size(); ++s)
  {
    r(static_cast<Eigen::Index>(s)) = ops.reward[policy(s)](static_cast<Eigen::Index>(s));
  }
  return r;
}

Eigen::VectorXd solve_linear(Eigen::MatrixXd const &p, double discount, Eigen::VectorXd const &reward)
{
  auto const      n = p.rows();
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) - discount * p;
  auto const      lu = a.partialPivLu();
  Eigen::VectorXd v  = lu.solve(reward);
  // One step of iterative refinement keeps the residual near machine precision for
  // discounts close to one.
  Eigen::VectorXd const r = reward - a * v;
  v += lu.solve(r);
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// ProfileSpace

ProfileSpace::ProfileSpace(std::vector<std::size_t> radices)
  : radices_(std::move(radices))
  , strides_(radices_.size(), 1)
{
  size_ = 1;
  for (std::size_t i = radices_.size(); i-- > 0;)
  {
    if (radices_[i] == 0)
    {
      throw InvalidArgument("profile space: player with no types");
    }
    strides_[i] = size_;
    size_ *= radices_[i];
  }
}

ProfileIndex ProfileSpace::encode(std::vector<std::size_t> const &types) const
{
  if (types.size() != radices_.size())
  {
    throw DimensionError("profile space: wrong number of player types");
  }
  ProfileIndex index = 0;
  for (std::size_t i = 0; i < types.size(); ++i)
  {
    if (types[i] >= radices_[i])
    {
      throw InvalidArgument("profile space: type index out of range");
    }
    index += types[i] * strides_[i];
  }
  return index;
}

std::vector<std::size_t> ProfileSpace::decode(ProfileIndex profile) const
{
  std::vector<std::size_t> types(radices_.size());
  for (std::size_t i = 0; i < radices_.size(); ++i)
  {
    types[i] = (profile / strides_[i]) % radices_[i];
  }
  return types;
}

std::size_t ProfileSpace::type_of(ProfileIndex profile, std::size_t player) const
{
  return (profile / strides_[player]) % radices_[player];
}

ProfileIndex ProfileSpace::with_type(ProfileIndex profile, std::size_t player, std::size_t type) const
{
  std::size_t const current = type_of(profile, player);
  return profile - current * strides_[player] + type * strides_[player];
}

ProfileIndex ProfileSpace::without(ProfileIndex profile, std::size_t player) const
{
  // Digits above `player` shift down by one radix.
  std::size_t const low  = profile % strides_[player];
  std::size_t const high = profile / (strides_[player] * radices_[player]);
  return high * strides_[player] + low;
}

ProfileSpace ProfileSpace::without_player(std::size_t player) const
{
  std::vector<std::size_t> reduced = radices_;
  reduced.erase(reduced.begin() + static_cast<std::ptrdiff_t>(player));
  return ProfileSpace(std::move(reduced));
}

// ---------------------------------------------------------------------------
// JointModel

JointModel::JointModel(std::vector<PlayerSpec> players, std::size_t actions, double discount,
                       std::optional<double> bound)
  : players_(std::move(players))
  , actions_(actions)
  , discount_(discount)
  , bound_(0.0)
  , available_(actions, true)
{
  if (actions_ == 0)
  {
    throw InvalidArgument("joint model: action set is empty");
  }
  if (!(discount_ >= 0.0 && discount_ < 1.0))
  {
    std::ostringstream msg;
    msg << "joint model: discount must lie in [0, 1), got " << discount_;
    throw InvalidArgument(msg.str());
  }

  std::vector<std::size_t> radices;
  double                   largest = 0.0;
  for (std::size_t i = 0; i < players_.size(); ++i)
  {
    auto const &p = players_[i];
    if (p.types() == 0)
    {
      throw InvalidArgument("joint model: player " + std::to_string(i) + " has no types");
    }
    if (p.transitions.size() != actions_)
    {
      throw DimensionError("joint model: player " + std::to_string(i) + " needs one kernel per action");
    }
    for (std::size_t t = 0; t < p.types(); ++t)
    {
      if (p.valuation[t].size() != actions_)
      {
        throw DimensionError("joint model: player " + std::to_string(i) + " valuation row " +
                             std::to_string(t) + " needs one entry per action");
      }
      for (double v : p.valuation[t])
      {
        if (!std::isfinite(v))
        {
          throw InvalidArgument("joint model: non-finite valuation");
        }
        largest = std::max(largest, std::abs(v));
      }
    }
    for (auto const &k : p.transitions)
    {
      if (k.dim() != p.types())
      {
        throw DimensionError("joint model: player " + std::to_string(i) + " kernel dimension mismatch");
      }
    }
    for (ActionIndex a : p.essential)
    {
      if (a >= actions_)
      {
        throw InvalidArgument("joint model: player " + std::to_string(i) + " marks an unknown action essential");
      }
    }
    radices.push_back(p.types());
  }

  if (bound)
  {
    if (largest > *bound)
    {
      std::ostringstream msg;
      msg << "joint model: valuation magnitude " << largest << " exceeds declared bound " << *bound;
      throw InvalidArgument(msg.str());
    }
    bound_ = *bound;
  }
  else
  {
    bound_ = largest;
  }
  space_ = ProfileSpace(std::move(radices));
}

double JointModel::welfare(ProfileIndex profile, ActionIndex a) const
{
  double total = 0.0;
  for (std::size_t i = 0; i < players_.size(); ++i)
  {
    total += valuation(i, space_.type_of(profile, i), a);
  }
  return total;
}

double JointModel::others_welfare(ProfileIndex profile, ActionIndex a, std::size_t player) const
{
  double total = 0.0;
  for (std::size_t i = 0; i < players_.size(); ++i)
  {
    if (i != player)
    {
      total += valuation(i, space_.type_of(profile, i), a);
    }
  }
  return total;
}

JointModel JointModel::without_player(std::size_t player) const
{
  std::vector<PlayerSpec> rest;
  for (std::size_t i = 0; i < players_.size(); ++i)
  {
    if (i != player)
    {
      rest.push_back(players_[i]);
    }
  }
  JointModel reduced(std::move(rest), actions_, discount_, bound_);
  reduced.available_ = available_;
  for (ActionIndex a : players_[player].essential)
  {
    reduced.available_[a] = false;
  }
  if (std::none_of(reduced.available_.begin(), reduced.available_.end(), [](bool b) { return b; }))
  {
    throw InvalidArgument("joint model: no action is available without player " + std::to_string(player));
  }
  return reduced;
}

JointModel JointModel::with_discount(double discount) const
{
  JointModel copy(players_, actions_, discount, bound_);
  copy.available_ = available_;
  return copy;
}

// ---------------------------------------------------------------------------
// Kernels and evaluation

DistributionVector joint_kernel(JointModel const &model, ProfileIndex profile, ActionIndex a)
{
  auto const     &space = model.profiles();
  Eigen::VectorXd mass(static_cast<Eigen::Index>(space.size()));
  auto const      current = space.decode(profile);
  for (ProfileIndex next = 0; next < space.size(); ++next)
  {
    double p = 1.0;
    for (std::size_t i = 0; i < model.players() && p > 0.0; ++i)
    {
      p *= model.player(i).transitions[a](current[i], space.type_of(next, i));
    }
    mass(static_cast<Eigen::Index>(next)) = p;
  }
  return DistributionVector::unchecked(std::move(mass));
}

Eigen::MatrixXd action_transition(JointModel const &model, ActionIndex a)
{
  auto const      n = static_cast<Eigen::Index>(model.profiles().size());
  Eigen::MatrixXd p(n, n);
  for (Eigen::Index s = 0; s < n; ++s)
  {
    p.row(s) = joint_kernel(model, static_cast<ProfileIndex>(s), a).vector().transpose();
  }
  return p;
}

Eigen::MatrixXd policy_transition(JointModel const &model, StationaryPolicy const &policy)
{
  auto const      n = static_cast<Eigen::Index>(model.profiles().size());
  Eigen::MatrixXd p(n, n);
  for (Eigen::Index s = 0; s < n; ++s)
  {
    auto const profile = static_cast<ProfileIndex>(s);
    p.row(s)           = joint_kernel(model, profile, policy(profile)).vector().transpose();
  }
  return p;
}

ValueTable evaluate(JointModel const &model, StationaryPolicy const &policy, Eigen::VectorXd const &reward)
{
  if (policy.size() != model.profiles().size() || static_cast<std::size_t>(reward.size()) != policy.size())
  {
    throw DimensionError("policy evaluation: policy or reward does not cover every profile");
  }
  return ValueTable{solve_linear(policy_transition(model, policy), model.discount(), reward)};
}

EfficientSolution solve_efficient(JointModel const &model, SolverOptions const &options)
{
  Operators const ops      = build_operators(model);
  double const    discount = model.discount();
  auto const      n        = static_cast<Eigen::Index>(model.profiles().size());

  Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
  double const    stop =
    discount > 0.0 ? options.tolerance * (1.0 - discount) / (2.0 * discount) : std::numeric_limits<double>::infinity();

  std::size_t iterations = 0;
  for (;;)
  {
    if (iterations >= options.max_iterations)
    {
      std::ostringstream msg;
      msg << "value iteration did not converge within " << options.max_iterations << " iterations at discount "
          << discount;
      throw NonConvergence(msg.str(), discount, options.max_iterations);
    }
    Eigen::VectorXd next = q_values(ops, discount, w).rowwise().maxCoeff();
    double const    diff = (next - w).cwiseAbs().maxCoeff();
    w                    = std::move(next);
    ++iterations;
    if (diff < stop)
    {
      break;
    }
  }

  // Policy iteration from the greedy policy: switch an action only on strict improvement.
  StationaryPolicy policy = greedy(q_values(ops, discount, w), tie_tolerance(w));
  Eigen::VectorXd  value  = evaluate(model, policy, policy_reward(ops, policy)).value;
  for (std::size_t round = 0; round < kPolicyIterationCap; ++round)
  {
    Eigen::MatrixXd const q       = q_values(ops, discount, value);
    double const          tie     = tie_tolerance(value);
    bool                  changed = false;
    for (Eigen::Index s = 0; s < n; ++s)
    {
      auto const  profile = static_cast<std::size_t>(s);
      Eigen::Index best    = 0;
      q.row(s).maxCoeff(&best);
      if (q(s, best) > q(s, static_cast<Eigen::Index>(policy.action[profile])) + tie)
      {
        policy.action[profile] = static_cast<ActionIndex>(best);
        changed                = true;
      }
    }
    if (!changed)
    {
      break;
    }
    value = evaluate(model, policy, policy_reward(ops, policy)).value;
  }

  // Canonical tie-break among optimal actions.
  policy = greedy(q_values(ops, discount, value), tie_tolerance(value));
  value  = evaluate(model, policy, policy_reward(ops, policy)).value;

  EfficientSolution solution;
  solution.policy     = std::move(policy);
  solution.welfare    = ValueTable{std::move(value)};
  solution.iterations = iterations;
  solution.residual   = bellman_residual(model, solution.welfare);
  return solution;
}

EfficientSolution solve_excluding(JointModel const &model, std::size_t player, SolverOptions const &options)
{
  if (player >= model.players())
  {
    throw InvalidArgument("solve_excluding: player index out of range");
  }
  return solve_efficient(model.without_player(player), options);
}

ValueTable player_value(JointModel const &model, StationaryPolicy const &policy, std::size_t player)
{
  auto const      n = static_cast<Eigen::Index>(model.profiles().size());
  Eigen::VectorXd r(n);
  for (Eigen::Index s = 0; s < n; ++s)
  {
    auto const profile = static_cast<ProfileIndex>(s);
    r(s)               = model.valuation(player, model.profiles().type_of(profile, player), policy(profile));
  }
  return evaluate(model, policy, r);
}

ValueTable others_value(JointModel const &model, StationaryPolicy const &policy, std::size_t player)
{
  auto const      n = static_cast<Eigen::Index>(model.profiles().size());
  Eigen::VectorXd r(n);
  for (Eigen::Index s = 0; s < n; ++s)
  {
    auto const profile = static_cast<ProfileIndex>(s);
    r(s)               = model.others_welfare(profile, policy(profile), player);
  }
  return evaluate(model, policy, r);
}

double continuation_value(JointModel const &model, ValueTable const &player_values, std::size_t player,
                          ProfileIndex profile, ActionIndex a)
{
  double const flow = model.valuation(player, model.profiles().type_of(profile, player), a);
  return flow + model.discount() * joint_kernel(model, profile, a).vector().dot(player_values.value);
}

double continuation_value(JointModel const &model, StationaryPolicy const &policy, std::size_t player,
                          ProfileIndex profile, ActionIndex a)
{
  return continuation_value(model, player_value(model, policy, player), player, profile, a);
}

double bellman_residual(JointModel const &model, ValueTable const &welfare)
{
  Operators const ops = build_operators(model);
  Eigen::VectorXd const best = q_values(ops, model.discount(), welfare.value).rowwise().maxCoeff();
  return (welfare.value - best).cwiseAbs().maxCoeff();
}

}  // namespace mechdyn::mdp
