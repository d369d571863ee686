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

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mechdyn::bilateral {

namespace {

void check_discount(double discount)
{
  if (!(discount >= 0.0 && discount < 1.0))
  {
    std::ostringstream msg;
    msg << "trade model: discount " << discount << " outside [0, 1)";
    throw InvalidArgument(msg.str());
  }
}

BudgetReport summarize(TradeModel const &model, Eigen::MatrixXd const &sum)
{
  Eigen::VectorXd const x = model.x().vector();
  Eigen::VectorXd const y = model.y().vector();

  BudgetReport report;
  report.seller_payoffs = sum * y;
  report.buyer_payoffs  = sum.transpose() * x;
  report.deficit        = x.dot(report.seller_payoffs);
  report.seller_floor   = report.seller_payoffs.minCoeff();
  report.buyer_floor    = report.buyer_payoffs.minCoeff();
  report.slack          = report.seller_floor + report.buyer_floor - report.deficit;
  report.holds          = report.slack >= -kHoldsTolerance;
  if (report.holds)
  {
    double const floors = report.seller_floor + report.buyer_floor;
    if (floors > 0.0)
    {
      report.fee_seller = report.deficit * report.seller_floor / floors;
      report.fee_buyer  = report.deficit * report.buyer_floor / floors;
    }
    else
    {
      report.fee_seller = 0.0;
      report.fee_buyer  = 0.0;
    }
  }
  return report;
}

}  // namespace

TradeModel::TradeModel(std::vector<double> values, StochasticMatrix seller, StochasticMatrix buyer,
                       DistributionVector x, DistributionVector y, double discount)
  : values_(std::move(values))
  , seller_(std::move(seller))
  , buyer_(std::move(buyer))
  , x_(std::move(x))
  , y_(std::move(y))
  , discount_(discount)
{
  gap_matrix(values_);
  std::size_t const k = values_.size();
  if (seller_.dim() != k || buyer_.dim() != k || x_.size() != k || y_.size() != k)
  {
    std::ostringstream msg;
    msg << "trade model: " << k << " values but seller chain " << seller_.dim() << ", buyer chain " << buyer_.dim()
        << ", x " << x_.size() << ", y " << y_.size();
    throw DimensionError(msg.str());
  }
  check_discount(discount_);
}

TradeModel TradeModel::with_discount(double discount) const
{
  return TradeModel(values_, seller_, buyer_, x_, y_, discount);
}

TradeModel TradeModel::scaled(double factor) const
{
  if (!(factor > 0.0) || !std::isfinite(factor))
  {
    throw InvalidArgument("trade model: scale factor must be positive");
  }
  std::vector<double> values = values_;
  for (auto &v : values)
  {
    v *= factor;
  }
  return TradeModel(std::move(values), seller_, buyer_, x_, y_, discount_);
}

Eigen::MatrixXd gap_matrix(std::vector<double> const &values)
{
  if (values.empty())
  {
    throw InvalidArgument("value grid is empty");
  }
  auto const      k   = static_cast<Eigen::Index>(values.size());
  Eigen::MatrixXd gap = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
  {
    double const vi = values[static_cast<std::size_t>(i)];
    if (!std::isfinite(vi))
    {
      throw InvalidArgument("value grid entry " + std::to_string(i) + " is not finite");
    }
    if (i > 0 && !(vi > values[static_cast<std::size_t>(i - 1)]))
    {
      std::ostringstream msg;
      msg << "value grid is not strictly increasing at index " << i << " (" << values[static_cast<std::size_t>(i - 1)]
          << " then " << vi << ")";
      throw NotIncreasing(msg.str());
    }
    for (Eigen::Index j = i + 1; j < k; ++j)
    {
      gap(i, j) = values[static_cast<std::size_t>(j)] - vi;
    }
  }
  return gap;
}

Eigen::MatrixXd q_matrix(TradeModel const &model, unsigned long long t)
{
  Eigen::MatrixXd const ps = markov::mat_power(model.seller(), t).matrix();
  Eigen::MatrixXd const pb = markov::mat_power(model.buyer(), t).matrix();
  return ps * gap_matrix(model.values()) * pb.transpose();
}

unsigned long long series_horizon(TradeModel const &model, double tol)
{
  if (!(tol > 0.0))
  {
    throw InvalidArgument("series tolerance must be positive");
  }
  double const delta = model.discount();
  double const scale = model.span() / (1.0 - delta);
  if (delta == 0.0 || scale < tol)
  {
    return 1;
  }
  auto const bound = [&](unsigned long long t) { return std::pow(delta, static_cast<double>(t)) * scale; };
  auto       t     = static_cast<unsigned long long>(std::max(1.0, std::ceil(std::log(tol / scale) / std::log(delta))));
  while (t > 1 && bound(t - 1) < tol)
  {
    --t;
  }
  while (!(bound(t) < tol))
  {
    ++t;
  }
  return t;
}

Eigen::MatrixXd discounted_q_sum(TradeModel const &model, unsigned long long horizon, double discount)
{
  if (!(discount >= 0.0 && discount <= 1.0))
  {
    throw InvalidArgument("discount must lie in [0, 1]");
  }
  auto const k = static_cast<Eigen::Index>(model.size());

  // Accumulated prefix of length r: sum, P_s^r, P_b^r, delta^r.
  Eigen::MatrixXd sum      = Eigen::MatrixXd::Zero(k, k);
  Eigen::MatrixXd seller_r = Eigen::MatrixXd::Identity(k, k);
  Eigen::MatrixXd buyer_r  = Eigen::MatrixXd::Identity(k, k);
  double          weight_r = 1.0;

  // Block of length m = 2^j starting at 0.
  Eigen::MatrixXd block    = gap_matrix(model.values());
  Eigen::MatrixXd seller_m = model.seller().matrix();
  Eigen::MatrixXd buyer_m  = model.buyer().matrix();
  double          weight_m = discount;

  while (horizon > 0)
  {
    if (horizon & 1ULL)
    {
      sum += weight_r * (seller_r * block * buyer_r.transpose());
      seller_r = seller_r * seller_m;
      buyer_r  = buyer_r * buyer_m;
      weight_r *= weight_m;
    }
    horizon >>= 1ULL;
    if (horizon > 0)
    {
      block    = block + weight_m * (seller_m * block * buyer_m.transpose());
      seller_m = seller_m * seller_m;
      buyer_m  = buyer_m * buyer_m;
      weight_m *= weight_m;
    }
  }
  return sum;
}

double deficit_series(TradeModel const &model, double tol)
{
  return condition_star(model, tol).deficit;
}

PayoffFloors payoff_floors(TradeModel const &model, double tol)
{
  auto const report = condition_star(model, tol);
  return {report.seller_floor, report.buyer_floor};
}

BudgetReport condition_star(TradeModel const &model, double tol)
{
  auto const horizon = series_horizon(model, tol);
  auto       report  = summarize(model, discounted_q_sum(model, horizon, model.discount()));
  report.discount    = model.discount();
  report.horizon     = horizon;
  report.tail_bound  = std::pow(model.discount(), static_cast<double>(horizon)) * model.span() / (1.0 - model.discount());
  return report;
}

BudgetReport finite_horizon_report(TradeModel const &model, unsigned long long horizon, double discount)
{
  if (horizon < 1)
  {
    throw InvalidArgument("finite horizon must be at least 1");
  }
  auto report       = summarize(model, discounted_q_sum(model, horizon, discount));
  report.discount   = discount;
  report.horizon    = horizon;
  report.tail_bound = 0.0;
  return report;
}

ThresholdResult delta_threshold(TradeModel const &model, double grid_step, double tol)
{
  if (!(grid_step > 0.0 && grid_step < 1.0))
  {
    throw InvalidArgument("grid step must lie in (0, 1)");
  }
  auto const points = static_cast<std::size_t>(std::ceil(1.0 / grid_step - 1e-9));

  ThresholdResult result;
  result.grid_step = grid_step;
  result.sweep.reserve(points);
  for (std::size_t j = 0; j < points; ++j)
  {
    double const delta = static_cast<double>(j) * grid_step;
    if (delta >= 1.0)
    {
      break;
    }
    auto const report = condition_star(model.with_discount(delta), tol);
    result.sweep.push_back({delta, report.slack, report.holds});
    if (report.holds && !result.threshold)
    {
      result.threshold = delta;
    }
    else if (!report.holds && result.threshold)
    {
      result.monotone = false;
    }
  }
  return result;
}

bool positively_correlated_impossible(StochasticMatrix const &seller, StochasticMatrix const &buyer)
{
  if (seller.dim() != 2 || buyer.dim() != 2)
  {
    throw DimensionError("positive-correlation test needs two-state chains");
  }
  auto const hypothesis = [](StochasticMatrix const &p) {
    return p(0, 0) >= 0.5 && p(1, 1) >= 0.5 && std::max(p(0, 0), p(1, 1)) > 0.5;
  };
  return hypothesis(seller) && hypothesis(buyer);
}

TradeModel diverse_preference_model(std::vector<double> values, StochasticMatrix const &seller,
                                    StochasticMatrix const &buyer, DistributionVector x, DistributionVector y,
                                    double discount)
{
  auto const k = static_cast<Eigen::Index>(values.size());
  if (k < 2)
  {
    throw InvalidArgument("diverse-preference model needs at least two values");
  }
  if (static_cast<Eigen::Index>(seller.dim()) != k || static_cast<Eigen::Index>(buyer.dim()) != k)
  {
    throw DimensionError("diverse-preference model: kernels do not match the value grid");
  }
  Eigen::MatrixXd ps = seller.matrix();
  Eigen::MatrixXd pb = buyer.matrix();
  ps.row(k - 1).setZero();
  ps(k - 1, k - 1) = 1.0;
  pb.row(0).setZero();
  pb(0, 0) = 1.0;
  return TradeModel(std::move(values), StochasticMatrix(std::move(ps)), StochasticMatrix(std::move(pb)), std::move(x),
                    std::move(y), discount);
}

namespace {

// Cumulative trapezoid integral of samples on a uniform grid.
Eigen::VectorXd cumulative_trapezoid(Eigen::VectorXd const &f, double h)
{
  Eigen::VectorXd c(f.size());
  c(0) = 0.0;
  for (Eigen::Index k = 1; k < f.size(); ++k)
  {
    c(k) = c(k - 1) + 0.5 * h * (f(k - 1) + f(k));
  }
  return c;
}

double trapezoid(Eigen::VectorXd const &f, double h)
{
  return cumulative_trapezoid(f, h)(f.size() - 1);
}

}  // namespace

TwoPeriodReport uniform_two_period_report(std::size_t grid_n, Persistence persistence)
{
  if (grid_n < 100)
  {
    throw InvalidArgument("two-period quadrature needs grid_n >= 100");
  }
  auto const      n     = static_cast<Eigen::Index>(grid_n);
  double const    h     = 1.0 / static_cast<double>(grid_n);
  Eigen::VectorXd theta = Eigen::VectorXd::LinSpaced(n + 1, 0.0, 1.0);

  // Inner integrals along the partner's type, with limits at grid nodes.
  Eigen::VectorXd const cum_theta = cumulative_trapezoid(theta, h);
  Eigen::VectorXd const cum_one   = cumulative_trapezoid(Eigen::VectorXd::Ones(n + 1), h);
  Eigen::VectorXd       seller_pays(n + 1), buyer_gets(n + 1), seller_surplus(n + 1), buyer_surplus(n + 1);
  for (Eigen::Index k = 0; k <= n; ++k)
  {
    double const upper_theta = cum_theta(n) - cum_theta(k);
    double const upper_mass  = cum_one(n) - cum_one(k);
    // Seller at theta_k trades with every higher buyer and receives theta_b.
    seller_pays(k)    = -upper_theta;
    seller_surplus(k) = upper_theta - theta(k) * upper_mass;
    // Buyer at theta_k trades with every lower seller and pays theta_s.
    buyer_gets(k)    = cum_theta(k);
    buyer_surplus(k) = theta(k) * cum_one(k) - cum_theta(k);
  }

  TwoPeriodReport report;
  report.grid_n      = grid_n;
  report.persistence = persistence;
  report.grid        = theta;

  double const z_s = trapezoid(seller_pays, h);
  double const z_b = trapezoid(buyer_gets, h);
  // Marginals are uniform in both periods under either process.
  report.expected_z_seller = {z_s, z_s};
  report.expected_z_buyer  = {z_b, z_b};
  report.deficit_t0        = -z_s - z_b;
  report.deficit_t1        = -z_s - z_b;
  report.total_deficit     = report.deficit_t0 + report.deficit_t1;

  if (persistence == Persistence::independent)
  {
    double const seller_future = trapezoid(seller_surplus, h);
    double const buyer_future  = trapezoid(buyer_surplus, h);
    report.seller_payoff       = seller_surplus.array() + seller_future;
    report.buyer_payoff        = buyer_surplus.array() + buyer_future;
  }
  else
  {
    report.seller_payoff = 2.0 * seller_surplus;
    report.buyer_payoff  = 2.0 * buyer_surplus;
  }
  report.max_fee_seller   = report.seller_payoff.minCoeff();
  report.max_fee_buyer    = report.buyer_payoff.minCoeff();
  report.residual_deficit = report.total_deficit - report.max_fee_seller - report.max_fee_buyer;
  return report;
}

mdp::JointModel as_joint_model(TradeModel const &model)
{
  mdp::PlayerSpec seller;
  mdp::PlayerSpec buyer;
  for (double v : model.values())
  {
    seller.valuation.push_back({0.0, -v});
    buyer.valuation.push_back({0.0, v});
  }
  seller.transitions = {model.seller(), model.seller()};
  buyer.transitions  = {model.buyer(), model.buyer()};
  seller.essential   = {1};
  buyer.essential    = {1};
  return mdp::JointModel({std::move(seller), std::move(buyer)}, 2, model.discount());
}

}  // namespace mechdyn::bilateral
