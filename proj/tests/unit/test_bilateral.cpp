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

#include <cmath>

using namespace mechdyn;
using namespace mechdyn::bilateral;
using testing::Rng;

namespace {

TradeModel two_state(double alpha, double discount)
{
  auto const p = StochasticMatrix::symmetric_two_state(alpha);
  return TradeModel({0.0, 1.0}, p, p, DistributionVector::uniform(2), DistributionVector::uniform(2), discount);
}

std::size_t sample(Rng &rng, Eigen::RowVectorXd const &mass)
{
  double const u   = testing::uniform(rng);
  double       acc = 0.0;
  for (Eigen::Index i = 0; i < mass.size(); ++i)
  {
    acc += mass(i);
    if (u < acc)
    {
      return static_cast<std::size_t>(i);
    }
  }
  return static_cast<std::size_t>(mass.size() - 1);
}

}  // namespace

TEST_CASE("gap matrix and value validation")
{
  Eigen::MatrixXd const v = gap_matrix({0.0, 0.5, 2.0});
  CHECK(v(0, 2) == 2.0);
  CHECK(v(1, 2) == 1.5);
  CHECK(v(2, 0) == 0.0);
  CHECK(v.diagonal().isZero());
  CHECK_THROWS_AS(gap_matrix({0.0, 0.0}), NotIncreasing);
  CHECK_THROWS_AS(gap_matrix({1.0, 0.5}), NotIncreasing);
  CHECK_THROWS_AS(two_state(0.5, 1.0), InvalidArgument);
  CHECK_THROWS_AS(TradeModel({0.0, 1.0, 2.0}, StochasticMatrix::uniform(2), StochasticMatrix::uniform(2),
                             DistributionVector::uniform(2), DistributionVector::uniform(2), 0.5),
                  DimensionError);
}

TEST_CASE("doubling series matches the term-by-term sum")
{
  Rng rng(41);
  for (int trial = 0; trial < 30; ++trial)
  {
    auto const     model   = testing::random_trade(rng, testing::pick(rng, 1, 4), 0.0, 0.9);
    unsigned const horizon = static_cast<unsigned>(testing::pick(rng, 1, 70));
    double const   delta   = testing::uniform(rng, 0.0, 1.0);
    Eigen::MatrixXd const diff =
      discounted_q_sum(model, horizon, delta) - testing::naive_q_sum(model, horizon, delta);
    CHECK(diff.cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("q matrix is the t-step expected gap")
{
  Rng        rng(42);
  auto const model = testing::random_trade(rng, 3, 0.0, 0.5);
  Eigen::MatrixXd const expected = testing::naive_product(
    testing::naive_product(testing::naive_power(model.seller().matrix(), 5), gap_matrix(model.values())),
    testing::naive_power(model.buyer().matrix(), 5).transpose());
  CHECK((q_matrix(model, 5) - expected).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("series horizon bounds the tail")
{
  Rng rng(43);
  for (double delta : {0.0, 0.3, 0.9, 0.99})
  {
    auto const model   = testing::random_trade(rng, 3, 0.0, delta);
    auto const horizon = series_horizon(model, 1e-10);
    auto const report  = condition_star(model);
    CHECK(report.horizon == horizon);
    CHECK(report.tail_bound < 1e-10);
    CHECK(report.tail_bound >= 0.0);
    // The truncated deficit is within the tail of a far longer sum.
    double const longer = model.x().vector().dot(discounted_q_sum(model, horizon * 3 + 10, delta) * model.y().vector());
    CHECK(std::abs(report.deficit - longer) <= 1e-10);
  }
}

TEST_CASE("two-state chains match the closed forms")
{
  for (double alpha : {0.25, 0.5, 0.75})
  {
    for (double delta : {0.3, 0.6, 0.9})
    {
      auto const   report = condition_star(two_state(alpha, delta));
      double const a      = 1.0 / (1.0 - delta);
      double const b      = 1.0 / (1.0 - delta * (2.0 * alpha - 1.0));
      CHECK(std::abs(report.deficit - 0.25 * a) <= 1e-9);
      CHECK(std::abs(report.seller_payoffs(0) - 0.25 * (a + b)) <= 1e-9);
      CHECK(std::abs(report.seller_payoffs(1) - 0.25 * (a - b)) <= 1e-9);
      CHECK(report.holds == (delta >= 1.0 / (3.0 - 2.0 * alpha) - 1e-12));
    }
    auto const threshold = delta_threshold(two_state(alpha, 0.5), 1e-3);
    REQUIRE(threshold.threshold);
    CHECK(std::abs(*threshold.threshold - 1.0 / (3.0 - 2.0 * alpha)) <= 2e-3);
    CHECK(threshold.monotone);
  }
}

TEST_CASE("fees split the deficit in proportion to the floors")
{
  auto const report = condition_star(two_state(0.5, 0.9));
  REQUIRE(report.holds);
  REQUIRE(report.fee_seller);
  REQUIRE(report.fee_buyer);
  CHECK(*report.fee_seller + *report.fee_buyer == doctest::Approx(report.deficit));
  CHECK(*report.fee_seller <= report.seller_floor + 1e-12);
  CHECK(*report.fee_buyer <= report.buyer_floor + 1e-12);

  auto const failing = condition_star(two_state(0.9, 0.5));
  CHECK_FALSE(failing.holds);
  CHECK_FALSE(failing.fee_seller);
}

TEST_CASE("finite two-period symmetric chains hold exactly when alpha is at most one half")
{
  for (int j = 0; j <= 10; ++j)
  {
    double const alpha  = 0.1 * j;
    auto const   report = finite_horizon_report(two_state(alpha, 0.0), 2, 1.0);
    CHECK(report.holds == (j <= 5));
    if (j == 5)
    {
      CHECK(std::abs(report.slack) <= 1e-12);
    }
  }
  CHECK_THROWS_AS(finite_horizon_report(two_state(0.5, 0.0), 0, 1.0), InvalidArgument);
}

TEST_CASE("positively correlated two-state chains fail the two-period check")
{
  Rng rng(44);
  int tested = 0;
  while (tested < 50)
  {
    double const a = testing::uniform(rng, 0.5, 1.0), b = testing::uniform(rng, 0.5, 1.0);
    double const c = testing::uniform(rng, 0.5, 1.0), d = testing::uniform(rng, 0.5, 1.0);
    StochasticMatrix const ps(std::vector<std::vector<double>>{{a, 1 - a}, {1 - b, b}});
    StochasticMatrix const pb(std::vector<std::vector<double>>{{c, 1 - c}, {1 - d, d}});
    if (!positively_correlated_impossible(ps, pb))
    {
      continue;
    }
    ++tested;
    TradeModel const model({0.0, 1.0}, ps, pb, DistributionVector::uniform(2),
                                      DistributionVector::uniform(2), 0.0);
    CHECK_FALSE(finite_horizon_report(model, 2, 1.0).holds);
  }
  CHECK_FALSE(positively_correlated_impossible(StochasticMatrix::symmetric_two_state(0.5),
                                               StochasticMatrix::symmetric_two_state(0.5)));
}

TEST_CASE("perfect correlation never balances unless no trade is possible")
{
  auto const id = StochasticMatrix::identity(3);
  for (double delta : {0.5, 0.9, 0.99})
  {
    TradeModel const model({0.0, 0.5, 1.0}, id, id, DistributionVector::uniform(3), DistributionVector::uniform(3),
                           delta);
    CHECK_FALSE(condition_star(model).holds);
  }
  TradeModel const vacuous({0.0, 0.5, 1.0}, id, id, DistributionVector::point_mass(3, 2),
                           DistributionVector::point_mass(3, 0), 0.9);
  auto const report = condition_star(vacuous);
  CHECK(report.holds);
  CHECK(report.deficit == 0.0);
}

TEST_CASE("deficit scales with the values and rises with the discount")
{
  Rng        rng(45);
  auto const model = testing::random_trade(rng, 3, 0.05, 0.7);
  CHECK(deficit_series(model.scaled(2.5)) == doctest::Approx(2.5 * deficit_series(model)));
  CHECK(deficit_series(model.with_discount(0.8)) > deficit_series(model));
  CHECK_THROWS_AS(model.scaled(0.0), InvalidArgument);
}

TEST_CASE("diverse preferences leave zero floors")
{
  for (std::size_t k : {2u, 3u, 4u})
  {
    std::vector<double> values;
    for (std::size_t i = 0; i < k; ++i)
    {
      values.push_back(static_cast<double>(i));
    }
    auto const model = diverse_preference_model(values, StochasticMatrix::uniform(k), StochasticMatrix::uniform(k),
                                                DistributionVector::uniform(k), DistributionVector::uniform(k), 0.9);
    auto const floors = payoff_floors(model);
    CHECK(floors.seller == 0.0);
    CHECK(floors.buyer == 0.0);
    CHECK_FALSE(condition_star(model).holds);
  }
}

TEST_CASE("series deficit equals the pivot mechanism's expected discounted deficit")
{
  Rng rng(46);
  for (int trial = 0; trial < 10; ++trial)
  {
    auto const model = testing::random_trade(rng, testing::pick(rng, 2, 4), 0.02, testing::uniform(rng, 0.1, 0.9));
    auto const joint = as_joint_model(model);
    auto const pivot = groves::pivot_mechanism(joint);
    auto const k     = static_cast<Eigen::Index>(model.size());
    Eigen::VectorXd initial(k * k);
    for (Eigen::Index s = 0; s < k; ++s)
    {
      initial.segment(s * k, k) = model.x().vector()(s) * model.y().vector();
    }
    double const mech = groves::expected_discounted_deficit(joint, pivot.efficient.policy, pivot.transfers, initial);
    CHECK(std::abs(mech - deficit_series(model)) <= 1e-8);
  }
}

TEST_CASE("simulated deficit agrees with the series within three standard errors")
{
  auto const model = two_state(0.5, 0.9);
  auto const report = condition_star(model);
  Rng        rng(47);
  std::size_t const paths   = 20000;
  unsigned const    horizon = 200;  // 0.9^200 * 10 is far below the sampling error
  double            sum = 0.0, sum_sq = 0.0;
  Eigen::MatrixXd const ps = model.seller().matrix(), pb = model.buyer().matrix();
  for (std::size_t m = 0; m < paths; ++m)
  {
    std::size_t s = sample(rng, model.x().vector().transpose());
    std::size_t b = sample(rng, model.y().vector().transpose());
    double      total = 0.0, weight = 1.0;
    for (unsigned t = 0; t < horizon; ++t)
    {
      if (s < b)
      {
        total += weight * (model.values()[b] - model.values()[s]);
      }
      s = sample(rng, ps.row(static_cast<Eigen::Index>(s)));
      b = sample(rng, pb.row(static_cast<Eigen::Index>(b)));
      weight *= model.discount();
    }
    sum += total;
    sum_sq += total * total;
  }
  double const mean = sum / static_cast<double>(paths);
  double const se   = std::sqrt((sum_sq / static_cast<double>(paths) - mean * mean) / static_cast<double>(paths));
  CHECK(std::abs(mean - report.deficit) <= 3.0 * se + 1e-6);
}

TEST_CASE("uniform two-period closed forms")
{
  auto const ind = uniform_two_period_report(2000, Persistence::independent);
  CHECK(std::abs(ind.deficit_t0 - 1.0 / 6.0) <= 1e-6);
  CHECK(std::abs(ind.expected_z_seller[0] + 1.0 / 3.0) <= 1e-6);
  CHECK(std::abs(ind.expected_z_buyer[0] - 1.0 / 6.0) <= 1e-6);
  CHECK(std::abs(ind.max_fee_seller - 1.0 / 6.0) <= 1e-6);
  CHECK(std::abs(ind.max_fee_buyer - 1.0 / 6.0) <= 1e-6);

  auto const per = uniform_two_period_report(2000, Persistence::persistent);
  CHECK(std::abs(per.total_deficit - 1.0 / 3.0) <= 1e-6);
  CHECK(std::abs(per.max_fee_seller) <= 1e-6);
  CHECK(std::abs(per.max_fee_buyer) <= 1e-6);
  CHECK_THROWS_AS(uniform_two_period_report(10), InvalidArgument);
}

TEST_CASE("threshold sweep covers the grid below one")
{
  auto const result = delta_threshold(two_state(0.5, 0.5), 0.25);
  REQUIRE(result.sweep.size() == 4);
  CHECK(result.sweep.back().discount == 0.75);
  CHECK_THROWS_AS(delta_threshold(two_state(0.5, 0.5), 0.0), InvalidArgument);
}
