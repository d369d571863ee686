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

#include "mechdyn/groves.hpp"

#include "mechdyn/error.hpp"

#include <cmath>
#include <limits>

namespace mechdyn::groves {

namespace {

void check_tables(JointModel const &model, std::vector<Eigen::VectorXd> const &tables, char const *what)
{
  if (tables.size() != model.players())
  {
    throw DimensionError(std::string(what) + ": need one table per player");
  }
  for (auto const &t : tables)
  {
    if (static_cast<std::size_t>(t.size()) != model.profiles().size())
    {
      throw DimensionError(std::string(what) + ": table does not cover every profile");
    }
  }
}

}  // namespace

TransferRule transfers_from_flow(JointModel const &model, StationaryPolicy const &policy,
                                 std::vector<Eigen::VectorXd> flow)
{
  check_tables(model, flow, "transfer rule");
  TransferRule rule;
  for (auto const &z : flow)
  {
    rule.total.push_back(mdp::evaluate(model, policy, z).value);
  }
  rule.flow = std::move(flow);
  return rule;
}

TransferRule transfers_from_total(JointModel const &model, StationaryPolicy const &policy,
                                  std::vector<Eigen::VectorXd> total)
{
  check_tables(model, total, "transfer rule");
  Eigen::MatrixXd const p = mdp::policy_transition(model, policy);
  TransferRule          rule;
  for (auto const &z : total)
  {
    rule.flow.push_back(z - model.discount() * (p * z));
  }
  rule.total = std::move(total);
  return rule;
}

TransferRule groves_transfers(JointModel const &model, StationaryPolicy const &policy,
                              std::vector<Eigen::VectorXd> const &phi)
{
  if (phi.size() != model.players())
  {
    throw DimensionError("groves transfers: need one Phi table per player");
  }
  auto const                  &space = model.profiles();
  std::vector<Eigen::VectorXd> total;
  for (std::size_t i = 0; i < model.players(); ++i)
  {
    auto const reduced = space.without_player(i);
    if (static_cast<std::size_t>(phi[i].size()) != reduced.size())
    {
      throw DimensionError("groves transfers: Phi table of player " + std::to_string(i) +
                           " must be indexed by the others' profiles");
    }
    Eigen::VectorXd z = -mdp::others_value(model, policy, i).value;
    for (ProfileIndex s = 0; s < space.size(); ++s)
    {
      z(static_cast<Eigen::Index>(s)) += phi[i](static_cast<Eigen::Index>(space.without(s, i)));
    }
    total.push_back(std::move(z));
  }
  return transfers_from_total(model, policy, std::move(total));
}

PivotMechanism pivot_mechanism(JointModel const &model, mdp::SolverOptions const &options)
{
  PivotMechanism mechanism;
  mechanism.efficient = mdp::solve_efficient(model, options);
  std::vector<Eigen::VectorXd> phi;
  for (std::size_t i = 0; i < model.players(); ++i)
  {
    mechanism.excluded.push_back(mdp::solve_excluding(model, i, options));
    phi.push_back(mechanism.excluded.back().welfare.value);
  }
  mechanism.transfers = groves_transfers(model, mechanism.efficient.policy, phi);
  return mechanism;
}

TransferRule pivot_transfers(JointModel const &model, mdp::SolverOptions const &options)
{
  return pivot_mechanism(model, options).transfers;
}

double deviation_gain(JointModel const &model, StationaryPolicy const &policy, TransferRule const &transfers,
                      std::vector<mdp::ValueTable> const &player_values, Deviation const &deviation)
{
  auto const        &space    = model.profiles();
  std::size_t const  i        = deviation.player;
  ProfileIndex const truth    = deviation.truth;
  ProfileIndex const reported = space.with_type(truth, i, deviation.report_type);
  auto const         action   = policy(reported);
  auto const        &v        = player_values[i].value;
  auto const        &z        = transfers.flow[i];
  auto const        &total    = transfers.total[i];

  Eigen::VectorXd const next = mdp::joint_kernel(model, truth, action).vector();
  double const          deviate =
    model.valuation(i, space.type_of(truth, i), action) - z(static_cast<Eigen::Index>(reported)) +
    model.discount() * next.dot(v - total);
  double const truthful = v(static_cast<Eigen::Index>(truth)) - total(static_cast<Eigen::Index>(truth));
  return deviate - truthful;
}

ICReport verify_periodic_ic(JointModel const &model, StationaryPolicy const &policy, TransferRule const &transfers,
                            double tolerance)
{
  if (transfers.players() != model.players())
  {
    throw DimensionError("IC check: transfer rule does not match the model");
  }
  auto const                   &space = model.profiles();
  std::vector<mdp::ValueTable> values;
  for (std::size_t i = 0; i < model.players(); ++i)
  {
    values.push_back(mdp::player_value(model, policy, i));
  }

  ICReport report;
  report.tolerance       = tolerance;
  report.per_state_gains = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(model.players()),
                                                 static_cast<Eigen::Index>(space.size()));
  // Cells without an alternative report hold the empty maximum, -inf.
  report.max_gain        = -std::numeric_limits<double>::infinity();
  bool any               = false;
  for (std::size_t i = 0; i < model.players(); ++i)
  {
    for (ProfileIndex s = 0; s < space.size(); ++s)
    {
      double      best  = -std::numeric_limits<double>::infinity();
      std::size_t own   = space.type_of(s, i);
      for (std::size_t r = 0; r < space.types(i); ++r)
      {
        if (r == own)
        {
          continue;
        }
        Deviation const d{i, s, r};
        double const    gain = deviation_gain(model, policy, transfers, values, d);
        best                 = std::max(best, gain);
        if (!any || gain > report.max_gain)
        {
          report.max_gain   = gain;
          report.worst_case = d;
          any               = true;
        }
      }
      report.per_state_gains(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(s)) = best;
    }
  }
  report.passed = report.max_gain <= tolerance;
  return report;
}

double verify_property_a(JointModel const &model, StationaryPolicy const &policy, TransferRule const &transfers)
{
  auto const &space    = model.profiles();
  double      residual = 0.0;
  for (std::size_t i = 0; i < model.players(); ++i)
  {
    Eigen::VectorXd const others = mdp::others_value(model, policy, i).value;
    auto const           &total  = transfers.total[i];
    for (ProfileIndex s = 0; s < space.size(); ++s)
    {
      std::size_t const own = space.type_of(s, i);
      for (std::size_t alt = own + 1; alt < space.types(i); ++alt)
      {
        ProfileIndex const t   = space.with_type(s, i, alt);
        auto const         si  = static_cast<Eigen::Index>(s);
        auto const         ti  = static_cast<Eigen::Index>(t);
        double const       lhs = total(si) - total(ti);
        double const       rhs = others(ti) - others(si);
        residual               = std::max(residual, std::abs(lhs - rhs));
      }
    }
  }
  return residual;
}

Eigen::VectorXd recovered_phi(JointModel const &model, StationaryPolicy const &policy, TransferRule const &transfers,
                              std::size_t player)
{
  return transfers.total[player] + mdp::others_value(model, policy, player).value;
}

double budget_flow(TransferRule const &transfers, ProfileIndex profile)
{
  double paid = 0.0;
  for (auto const &z : transfers.flow)
  {
    paid += z(static_cast<Eigen::Index>(profile));
  }
  return 0.0 - paid;  // avoids -0 in reports
}

double expected_discounted_deficit(JointModel const &model, StationaryPolicy const &policy,
                                   TransferRule const &transfers, Eigen::VectorXd const &initial)
{
  auto const      n = static_cast<Eigen::Index>(model.profiles().size());
  Eigen::VectorXd deficit(n);
  for (Eigen::Index s = 0; s < n; ++s)
  {
    deficit(s) = budget_flow(transfers, static_cast<ProfileIndex>(s));
  }
  return initial.dot(mdp::evaluate(model, policy, deficit).value);
}

Eigen::VectorXd truthful_payoff(JointModel const &model, StationaryPolicy const &policy, TransferRule const &transfers,
                                std::size_t player)
{
  return mdp::player_value(model, policy, player).value - transfers.total[player];
}

}  // namespace mechdyn::groves
