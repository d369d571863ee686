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


#include "mechdyn/bilateral.hpp"
#include "mechdyn/error.hpp"
#include "mechdyn/groves.hpp"
#include "random_models.hpp"

#include <doctest.h>

using namespace mechdyn;
using namespace mechdyn::groves;
using testing::Rng;

namespace {

std::vector<Eigen::VectorXd> random_phi(Rng &rng, JointModel const &model)
{
  std::vector<Eigen::VectorXd> phi;
  for (std::size_t i = 0; i < model.players(); ++i)
  {
    auto const      k = static_cast<Eigen::Index>(model.profiles().without_player(i).size());
    Eigen::VectorXd t(k);
    for (auto &x : t)
    {
      x = testing::uniform(rng, -3.0, 3.0);
    }
    phi.push_back(std::move(t));
  }
  return phi;
}

bilateral::TradeModel iid_trade(std::vector<double> values, double discount)
{
  auto const k = values.size();
  return bilateral::TradeModel(std::move(values), markov::StochasticMatrix::uniform(k),
                               markov::StochasticMatrix::uniform(k), markov::DistributionVector::uniform(k),
                               markov::DistributionVector::uniform(k), discount);
}

}  // namespace

TEST_CASE("deviation gain matches a direct one-shot oracle")
{
  Rng rng(31);
  for (int trial = 0; trial < 15; ++trial)
  {
    auto const model = testing::random_joint(rng, 2, 3, 3, testing::uniform(rng, 0.1, 0.9));
    auto const sol   = mdp::solve_efficient(model);
    // Arbitrary flows: the oracle must agree for non-Groves rules too.
    std::vector<Eigen::VectorXd> flow;
    for (std::size_t i = 0; i < 2; ++i)
    {
      flow.push_back(Eigen::VectorXd::Random(static_cast<Eigen::Index>(model.profiles().size())));
    }
    auto const                   rule = transfers_from_flow(model, sol.policy, flow);
    std::vector<mdp::ValueTable> values{mdp::player_value(model, sol.policy, 0), mdp::player_value(model, sol.policy, 1)};
    for (std::size_t i = 0; i < 2; ++i)
    {
      for (ProfileIndex s = 0; s < model.profiles().size(); ++s)
      {
        for (std::size_t r = 0; r < model.profiles().types(i); ++r)
        {
          double const gain   = deviation_gain(model, sol.policy, rule, values, {i, s, r});
          double const oracle = testing::one_shot_deviation(model, sol.policy, rule, i, s, r);
          CHECK(gain == doctest::Approx(oracle).epsilon(1e-9).scale(1.0));
        }
      }
    }
  }
}

TEST_CASE("pivot and random Groves transfers are incentive compatible and satisfy Property A")
{
  Rng rng(32);
  for (int trial = 0; trial < 40; ++trial)
  {
    auto const model = testing::random_joint(rng, 2, 3, 3, testing::uniform(rng, 0.0, 0.95));
    auto const pivot = pivot_mechanism(model);
    auto const &policy = pivot.efficient.policy;
    auto const ic    = verify_periodic_ic(model, policy, pivot.transfers, 1e-9);
    CHECK(ic.passed);
    CHECK(ic.max_gain <= 1e-9);
    CHECK(ic.per_state_gains.maxCoeff() == ic.max_gain);
    CHECK(verify_property_a(model, policy, pivot.transfers) <= 1e-9);

    auto const groves = groves_transfers(model, policy, random_phi(rng, model));
    CHECK(verify_periodic_ic(model, policy, groves, 1e-9).max_gain <= 1e-9);
    CHECK(verify_property_a(model, policy, groves) <= 1e-9);
  }
}

TEST_CASE("per-period transfers reproduce their totals")
{
  Rng        rng(33);
  auto const model = testing::random_joint(rng, 2, 3, 3, 0.85);
  auto const sol   = mdp::solve_efficient(model);
  auto const rule  = groves_transfers(model, sol.policy, random_phi(rng, model));
  for (std::size_t i = 0; i < 2; ++i)
  {
    Eigen::VectorXd const total = testing::iterate_policy_value(model, sol.policy, rule.flow[i]);
    CHECK((total - rule.total[i]).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("recovered Phi is independent of the player's own type")
{
  Rng        rng(34);
  auto const model = testing::random_joint(rng, 2, 3, 2, 0.8);
  auto const sol   = mdp::solve_efficient(model);
  auto const phi   = random_phi(rng, model);
  auto const rule  = groves_transfers(model, sol.policy, phi);
  for (std::size_t i = 0; i < 2; ++i)
  {
    Eigen::VectorXd const back = recovered_phi(model, sol.policy, rule, i);
    for (ProfileIndex s = 0; s < model.profiles().size(); ++s)
    {
      CHECK(back(static_cast<Eigen::Index>(s)) ==
            doctest::Approx(phi[i](static_cast<Eigen::Index>(model.profiles().without(s, i)))));
    }
  }
}

TEST_CASE("pivot payoff equals total welfare minus welfare without the player")
{
  Rng rng(35);
  for (int trial = 0; trial < 20; ++trial)
  {
    auto const model = testing::random_joint(rng, 2, 3, 3, testing::uniform(rng, 0.0, 0.9));
    auto const pivot = pivot_mechanism(model);
    for (std::size_t i = 0; i < 2; ++i)
    {
      Eigen::VectorXd const payoff = truthful_payoff(model, pivot.efficient.policy, pivot.transfers, i);
      for (ProfileIndex s = 0; s < model.profiles().size(); ++s)
      {
        double const expected = pivot.efficient.welfare[s] - pivot.excluded[i].welfare[model.profiles().without(s, i)];
        CHECK(std::abs(payoff(static_cast<Eigen::Index>(s)) - expected) <= 1e-9);
      }
    }
  }
}

TEST_CASE("bilateral pivot transfers")
{
  auto const model  = bilateral::as_joint_model(iid_trade({0.0, 1.0}, 0.9));
  auto const pivot  = pivot_mechanism(model);
  auto const &space = model.profiles();
  // Trade state (0, 1): the seller is paid the buyer's value, the buyer pays the seller's value.
  auto const trade = space.encode({0, 1});
  CHECK(pivot.efficient.policy(trade) == 1);
  CHECK(pivot.transfers.flow[0](static_cast<Eigen::Index>(trade)) == doctest::Approx(-1.0));
  CHECK(pivot.transfers.flow[1](static_cast<Eigen::Index>(trade)) == doctest::Approx(0.0));
  CHECK(budget_flow(pivot.transfers, trade) == doctest::Approx(1.0));
  for (auto const s : {space.encode({0, 0}), space.encode({1, 0}), space.encode({1, 1})})
  {
    CHECK(pivot.efficient.policy(s) == 0);
    CHECK(pivot.transfers.flow[0](static_cast<Eigen::Index>(s)) == doctest::Approx(0.0));
    CHECK(pivot.transfers.flow[1](static_cast<Eigen::Index>(s)) == doctest::Approx(0.0));
    CHECK(budget_flow(pivot.transfers, s) == 0.0);
  }
}

TEST_CASE("flow deficit at trade states is the value gap")
{
  Rng        rng(36);
  auto const trade = testing::random_trade(rng, 4, 0.05, 0.8);
  auto const model = bilateral::as_joint_model(trade);
  auto const pivot = pivot_mechanism(model);
  auto const &v    = trade.values();
  for (std::size_t s = 0; s < 4; ++s)
  {
    for (std::size_t b = 0; b < 4; ++b)
    {
      auto const profile = model.profiles().encode({s, b});
      double const expected = s < b ? v[b] - v[s] : 0.0;
      CHECK(budget_flow(pivot.transfers, profile) == doctest::Approx(expected));
      CHECK(pivot.transfers.flow[0](static_cast<Eigen::Index>(profile)) == doctest::Approx(s < b ? -v[b] : 0.0));
      CHECK(pivot.transfers.flow[1](static_cast<Eigen::Index>(profile)) == doctest::Approx(s < b ? v[s] : 0.0));
    }
  }
}

TEST_CASE("a perturbed seller payment at one trade state is detected")
{
  auto const   model = bilateral::as_joint_model(iid_trade({0.0, 1.0, 2.0}, 0.9));
  auto const   pivot = pivot_mechanism(model);
  auto         flow  = pivot.transfers.flow;
  auto const   state = model.profiles().encode({0, 2});
  flow[0](static_cast<Eigen::Index>(state)) += 0.01;
  auto const perturbed = transfers_from_flow(model, pivot.efficient.policy, flow);
  auto const ic        = verify_periodic_ic(model, pivot.efficient.policy, perturbed, 1e-9);
  CHECK_FALSE(ic.passed);
  CHECK(ic.max_gain >= 0.005);
  CHECK(ic.worst_case.player == 0);
  CHECK(ic.worst_case.truth == state);
  CHECK(verify_property_a(model, pivot.efficient.policy, perturbed) > 1e-4);
}

TEST_CASE("single player with zero Phi")
{
  mdp::PlayerSpec p;
  p.valuation   = {{0.0, 1.0}, {2.0, 0.5}};
  p.transitions = {markov::StochasticMatrix::symmetric_two_state(0.7), markov::StochasticMatrix::uniform(2)};
  JointModel const model({p}, 2, 0.9);
  auto const       sol  = mdp::solve_efficient(model);
  auto const       rule = groves_transfers(model, sol.policy, {Eigen::VectorXd::Zero(1)});
  CHECK(rule.total[0].cwiseAbs().maxCoeff() == 0.0);
  CHECK(verify_property_a(model, sol.policy, rule) == 0.0);
  CHECK(verify_periodic_ic(model, sol.policy, rule, 1e-9).passed);
  CHECK(pivot_transfers(model).flow[0].cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("incentive compatible rules satisfy Property A on full-support models")
{
  Rng rng(37);
  for (int trial = 0; trial < 30; ++trial)
  {
    auto const model = testing::random_joint(rng, 2, 3, 3, testing::uniform(rng, 0.1, 0.9));
    auto const sol   = mdp::solve_efficient(model);
    auto const rule  = groves_transfers(model, sol.policy, random_phi(rng, model));
    if (verify_periodic_ic(model, sol.policy, rule, 1e-9).passed)
    {
      CHECK(verify_property_a(model, sol.policy, rule) <= 1e-6);
    }
  }
}

TEST_CASE("table sizes are validated")
{
  Rng        rng(38);
  auto const model = testing::random_joint(rng, 2, 2, 2, 0.5);
  auto const sol   = mdp::solve_efficient(model);
  CHECK_THROWS_AS(groves_transfers(model, sol.policy, {Eigen::VectorXd::Zero(1)}), DimensionError);
  CHECK_THROWS_AS(transfers_from_flow(model, sol.policy, {Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1)}),
                  DimensionError);
}

TEST_CASE("expected discounted deficit equals the discounted flow budget")
{
  Rng        rng(39);
  auto const model   = testing::random_joint(rng, 2, 3, 2, 0.75);
  auto const pivot   = pivot_mechanism(model);
  auto const n       = static_cast<Eigen::Index>(model.profiles().size());
  Eigen::VectorXd flow(n);
  for (Eigen::Index s = 0; s < n; ++s)
  {
    flow(s) = budget_flow(pivot.transfers, static_cast<ProfileIndex>(s));
  }
  Eigen::VectorXd const total   = testing::iterate_policy_value(model, pivot.efficient.policy, flow);
  Eigen::VectorXd const initial = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  CHECK(expected_discounted_deficit(model, pivot.efficient.policy, pivot.transfers, initial) ==
        doctest::Approx(initial.dot(total)));
}
