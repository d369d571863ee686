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

#include "mechdyn/screening.hpp"

#include "mechdyn/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mechdyn::screening {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double trapezoid_sum(Eigen::VectorXd const &f, double h)
{
  return h * (f.sum() - 0.5 * (f(0) + f(f.size() - 1)));
}

// Second-order differences of each column along the rows.
Eigen::MatrixXd row_derivative(Eigen::MatrixXd const &f, double h)
{
  Eigen::Index const n = f.rows();
  Eigen::MatrixXd    d(f.rows(), f.cols());
  // One-sided second-order stencils in difference form, exactly zero on constant columns.
  d.row(0)     = (4.0 * (f.row(1) - f.row(0)) - (f.row(2) - f.row(0))) / (2.0 * h);
  d.row(n - 1) = (4.0 * (f.row(n - 1) - f.row(n - 2)) - (f.row(n - 1) - f.row(n - 3))) / (2.0 * h);
  for (Eigen::Index i = 1; i + 1 < n; ++i)
  {
    d.row(i) = (f.row(i + 1) - f.row(i - 1)) / (2.0 * h);
  }
  return d;
}

Eigen::MatrixXd combine(std::vector<Eigen::MatrixXd> const &tables, std::vector<std::pair<std::size_t, double>> const &w)
{
  Eigen::MatrixXd out = w.front().second * tables[w.front().first];
  for (std::size_t k = 1; k < w.size(); ++k)
  {
    out += w[k].second * tables[w[k].first];
  }
  return out;
}

Eigen::RowVectorXd combine_row(std::vector<Eigen::MatrixXd> const &tables,
                               std::vector<std::pair<std::size_t, double>> const &w, Eigen::Index row)
{
  Eigen::RowVectorXd out = w.front().second * tables[w.front().first].row(row);
  for (std::size_t k = 1; k < w.size(); ++k)
  {
    out += w[k].second * tables[w[k].first].row(row);
  }
  return out;
}

void check_rules(ScreeningModel const &model, DecisionRules const &rules)
{
  Eigen::Index const n = model.nodes();
  if (rules.first.size() != n || rules.second.rows() != n || rules.second.cols() != n)
  {
    std::ostringstream msg;
    msg << "decision rules must cover the " << n << "-node grid (got " << rules.first.size() << " and "
        << rules.second.rows() << "x" << rules.second.cols() << ")";
    throw DimensionError(msg.str());
  }
  if (!rules.first.allFinite() || !rules.second.allFinite())
  {
    throw InvalidArgument("decision rules contain non-finite entries");
  }
  if (model.valuation().trading)
  {
    auto const outside = [](double q) { return q < 0.0 || q > 1.0; };
    for (Eigen::Index k = 0; k < n; ++k)
    {
      if (outside(rules.first(k)))
      {
        throw InvalidArgument("trade probability q1 at node " + std::to_string(k) + " outside [0, 1]");
      }
      for (Eigen::Index j = 0; j < n; ++j)
      {
        if (outside(rules.second(k, j)))
        {
          throw InvalidArgument("trade probability q2 at (" + std::to_string(k) + ", " + std::to_string(j) +
                                ") outside [0, 1]");
        }
      }
    }
  }
}

void require_trading(ScreeningModel const &model, char const *what)
{
  if (!model.valuation().trading)
  {
    throw InvalidArgument(std::string(what) + " requires the trading valuation v = theta * q");
  }
}

// 1 - F_1 at every node, taken from the same cumulative sums as F_1.
Eigen::VectorXd upper_tail(ScreeningModel const &model)
{
  auto const &c = model.cdf1();
  return (Eigen::VectorXd::Constant(c.size(), c(c.size() - 1)) - c).eval();
}

// Tabulates v or v_theta at (theta_j, a(k, j)).
template <class F>
Eigen::MatrixXd tabulate_second(ScreeningModel const &model, Eigen::MatrixXd const &actions, F const &f)
{
  Eigen::Index const n = model.nodes();
  Eigen::MatrixXd    out(n, n);
  for (Eigen::Index k = 0; k < n; ++k)
  {
    for (Eigen::Index j = 0; j < n; ++j)
    {
      out(k, j) = f(model.grid()(j), actions(k, j));
    }
  }
  return out;
}

// Per-row conditioning on a_1(theta_i): row i of the interpolated table at first(i).
Eigen::MatrixXd conditioned(ScreeningModel const &model, std::vector<Eigen::MatrixXd> const &tables,
                            Eigen::VectorXd const &first)
{
  Eigen::Index const n = model.nodes();
  Eigen::MatrixXd    out(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
  {
    out.row(i) = combine_row(tables, model.action_weights(first(i)), i);
  }
  return out;
}

std::vector<Eigen::MatrixXd> node_tables(ScreeningModel const &model, Eigen::MatrixXd const &(ScreeningModel::*get)(std::size_t) const)
{
  std::vector<Eigen::MatrixXd> out;
  for (std::size_t m = 0; m < model.action_nodes().size(); ++m)
  {
    out.push_back((model.*get)(m));
  }
  return out;
}

// out(k, l) = sum_m lambda_m(first(l)) * (tables[m] * rhs^T)(k, l); the column l of
// rhs^T is the integrand after report l.
Eigen::MatrixXd mixed_product(ScreeningModel const &model, std::vector<Eigen::MatrixXd> const &tables,
                              Eigen::MatrixXd const &rhs, Eigen::VectorXd const &first)
{
  Eigen::Index const n = model.nodes();
  Eigen::MatrixXd    out = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t m = 0; m < tables.size(); ++m)
  {
    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(n);
    for (Eigen::Index l = 0; l < n; ++l)
    {
      for (auto const &[node, w] : model.action_weights(first(l)))
      {
        if (node == m)
        {
          lambda(l) = w;
        }
      }
    }
    if (lambda.isZero(0.0))
    {
      continue;
    }
    Eigen::MatrixXd const product = tables[m] * rhs.transpose();
    out += product * lambda.asDiagonal();
  }
  return out;
}

}  // namespace

Valuation Valuation::trade()
{
  Valuation v;
  v.value   = [](double theta, double q) { return theta * q; };
  v.slope   = [](double, double q) { return q; };
  v.trading = true;
  return v;
}

Eigen::VectorXd cumulative_trapezoid(Eigen::VectorXd const &f, double h)
{
  Eigen::VectorXd c(f.size());
  if (f.size() == 0)
  {
    return c;
  }
  c(0) = 0.0;
  for (Eigen::Index k = 1; k < f.size(); ++k)
  {
    c(k) = c(k - 1) + 0.5 * h * (f(k - 1) + f(k));
  }
  return c;
}

ScreeningModel::ScreeningModel(double lower, double upper, Eigen::VectorXd f1, std::vector<Eigen::MatrixXd> f2,
                               std::vector<double> action_nodes, double discount, Valuation valuation)
  : f1_(std::move(f1))
  , f2_(std::move(f2))
  , action_nodes_(std::move(action_nodes))
  , discount_(discount)
  , valuation_(std::move(valuation))
{
  if (!std::isfinite(lower) || !std::isfinite(upper) || !(lower < upper))
  {
    throw InvalidArgument("type interval must satisfy lower < upper");
  }
  Eigen::Index const n = f1_.size();
  if (n < 3)
  {
    throw InvalidArgument("type grid needs at least two intervals");
  }
  if (!(discount_ >= 0.0 && discount_ <= 1.0))
  {
    throw InvalidArgument("screening discount must lie in [0, 1]");
  }
  if (!valuation_.value || !valuation_.slope)
  {
    throw InvalidArgument("valuation needs both v and v_theta");
  }
  if (action_nodes_.empty() || action_nodes_.size() != f2_.size())
  {
    throw DimensionError("need one f2 table per action node");
  }
  for (std::size_t m = 1; m < action_nodes_.size(); ++m)
  {
    if (!(action_nodes_[m] > action_nodes_[m - 1]))
    {
      throw NotIncreasing("action nodes must be strictly increasing");
    }
  }

  step_ = (upper - lower) / static_cast<double>(n - 1);
  grid_.resize(n);
  for (Eigen::Index k = 0; k < n; ++k)
  {
    grid_(k) = lower + static_cast<double>(k) * step_;
  }
  grid_(n - 1) = upper;
  weights_     = Eigen::VectorXd::Constant(n, step_);
  weights_(0) = weights_(n - 1) = 0.5 * step_;

  if (!f1_.allFinite() || f1_.minCoeff() < 0.0)
  {
    throw InvalidArgument("f1 must be finite and nonnegative");
  }
  double const mass1 = trapezoid_sum(f1_, step_);
  if (std::abs(mass1 - 1.0) > kMassTolerance)
  {
    std::ostringstream msg;
    msg.precision(10);
    msg << "f1 integrates to " << mass1 << ", not 1";
    throw InvalidArgument(msg.str());
  }
  cdf1_ = cumulative_trapezoid(f1_, step_);

  for (std::size_t m = 0; m < f2_.size(); ++m)
  {
    auto const &t = f2_[m];
    if (t.rows() != n || t.cols() != n)
    {
      throw DimensionError("f2 table " + std::to_string(m) + " must be square over the grid");
    }
    if (!t.allFinite() || t.minCoeff() < 0.0)
    {
      throw InvalidArgument("f2 table " + std::to_string(m) + " must be finite and nonnegative");
    }
    Eigen::MatrixXd cdf(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
    {
      Eigen::VectorXd const row  = t.row(i).transpose();
      Eigen::VectorXd const cum  = cumulative_trapezoid(row, step_);
      double const          mass = cum(n - 1);
      if (std::abs(mass - 1.0) > kMassTolerance)
      {
        std::ostringstream msg;
        msg.precision(10);
        msg << "f2(. | theta1 = " << grid_(i) << ", a = " << action_nodes_[m] << ") integrates to " << mass
            << ", not 1";
        throw InvalidArgument(msg.str());
      }
      cdf.row(i) = cum.transpose();
    }
    slope2_.push_back(row_derivative(cdf, step_));
    cdf2_.push_back(std::move(cdf));
  }

  // Single crossing on the grid, and v_theta against central differences of v.
  std::vector<double> probes = action_nodes_;
  if (valuation_.trading)
  {
    probes.push_back(0.0);
    probes.push_back(1.0);
  }
  std::sort(probes.begin(), probes.end());
  probes.erase(std::unique(probes.begin(), probes.end()), probes.end());
  for (Eigen::Index k = 0; k < n; ++k)
  {
    double const theta = grid_(k);
    double       prev  = -std::numeric_limits<double>::infinity();
    for (double a : probes)
    {
      double const s = valuation_.slope(theta, a);
      if (!std::isfinite(s) || s < -1e-12)
      {
        throw InvalidArgument("valuation violates v_theta >= 0 at theta = " + std::to_string(theta));
      }
      if (s < prev - 1e-12)
      {
        throw InvalidArgument("valuation violates single crossing at theta = " + std::to_string(theta));
      }
      prev = s;
      if (k > 0 && k + 1 < n)
      {
        double const fd = (valuation_.value(grid_(k + 1), a) - valuation_.value(grid_(k - 1), a)) / (2.0 * step_);
        if (std::abs(fd - s) > 1e-3 * (1.0 + std::abs(s)))
        {
          throw InvalidArgument("v_theta does not match the slope of v at theta = " + std::to_string(theta));
        }
      }
    }
  }
}

ScreeningModel ScreeningModel::from_functions(double lower, double upper, std::size_t intervals,
                                              std::function<double(double)> const                 &f1,
                                              std::function<double(double, double, double)> const &f2,
                                              std::vector<double> action_nodes, double discount,
                                              Valuation valuation)
{
  if (intervals < 2)
  {
    throw InvalidArgument("type grid needs at least two intervals");
  }
  auto const   n = static_cast<Eigen::Index>(intervals) + 1;
  double const h = (upper - lower) / static_cast<double>(intervals);
  auto const   node = [&](Eigen::Index k) { return k == n - 1 ? upper : lower + static_cast<double>(k) * h; };

  Eigen::VectorXd density1(n);
  for (Eigen::Index k = 0; k < n; ++k)
  {
    density1(k) = f1(node(k));
  }
  std::vector<Eigen::MatrixXd> tables;
  for (double a : action_nodes)
  {
    Eigen::MatrixXd t(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
    {
      for (Eigen::Index j = 0; j < n; ++j)
      {
        t(i, j) = f2(node(i), node(j), a);
      }
    }
    tables.push_back(std::move(t));
  }
  return ScreeningModel(lower, upper, std::move(density1), std::move(tables), std::move(action_nodes), discount,
                        std::move(valuation));
}

std::vector<std::pair<std::size_t, double>> ScreeningModel::action_weights(double action) const
{
  if (action_nodes_.size() == 1)
  {
    return {{0, 1.0}};
  }
  double const lo = action_nodes_.front();
  double const hi = action_nodes_.back();
  if (!std::isfinite(action) || action < lo - 1e-12 || action > hi + 1e-12)
  {
    std::ostringstream msg;
    msg << "action " << action << " outside the tabulated range [" << lo << ", " << hi << "]";
    throw InvalidArgument(msg.str());
  }
  action = std::clamp(action, lo, hi);
  auto const  it = std::upper_bound(action_nodes_.begin(), action_nodes_.end(), action);
  std::size_t m  = static_cast<std::size_t>(it - action_nodes_.begin());
  m              = std::min(std::max<std::size_t>(m, 1), action_nodes_.size() - 1) - 1;
  double const lambda = (action - action_nodes_[m]) / (action_nodes_[m + 1] - action_nodes_[m]);
  if (lambda <= 0.0)
  {
    return {{m, 1.0}};
  }
  if (lambda >= 1.0)
  {
    return {{m + 1, 1.0}};
  }
  return {{m, 1.0 - lambda}, {m + 1, lambda}};
}

Eigen::MatrixXd ScreeningModel::density2(double action) const
{
  return combine(f2_, action_weights(action));
}

Eigen::MatrixXd ScreeningModel::cdf2(double action) const
{
  return combine(cdf2_, action_weights(action));
}

Eigen::MatrixXd ScreeningModel::cdf2_slope(double action) const
{
  return combine(slope2_, action_weights(action));
}

ScreeningModel ScreeningModel::with_discount(double discount) const
{
  if (!(discount >= 0.0 && discount <= 1.0))
  {
    throw InvalidArgument("screening discount must lie in [0, 1]");
  }
  ScreeningModel copy = *this;
  copy.discount_      = discount;
  return copy;
}

double check_monotonicity2(ScreeningModel const &model, DecisionRules const &rules)
{
  check_rules(model, rules);
  Eigen::Index const n     = model.nodes();
  double             worst = 0.0;
  for (Eigen::Index k = 0; k < n; ++k)
  {
    for (Eigen::Index j = 0; j + 1 < n; ++j)
    {
      worst = std::max(worst, rules.second(k, j) - rules.second(k, j + 1));
    }
  }
  return worst;
}

Eigen::VectorXd u2_envelope(ScreeningModel const &model, DecisionRules const &rules, std::size_t report,
                            double u2_base)
{
  check_rules(model, rules);
  auto const k = static_cast<Eigen::Index>(report);
  if (k >= model.nodes())
  {
    throw InvalidArgument("report index outside the grid");
  }
  Eigen::VectorXd slope(model.nodes());
  for (Eigen::Index j = 0; j < model.nodes(); ++j)
  {
    slope(j) = model.valuation().slope(model.grid()(j), rules.second(k, j));
  }
  return (cumulative_trapezoid(slope, model.step()).array() + u2_base).matrix();
}

double impulse_response(ScreeningModel const &model, double theta1, double theta2, double action)
{
  double const lo = model.lower();
  double const hi = model.upper();
  if (!(theta1 >= lo && theta1 <= hi && theta2 >= lo && theta2 <= hi))
  {
    throw InvalidArgument("impulse response evaluated outside the type interval");
  }
  double const n  = static_cast<double>(model.intervals());
  auto const   at = [&](double theta, Eigen::Index &cell) {
    double const x = (theta - lo) / model.step();
    cell           = std::min(static_cast<Eigen::Index>(std::floor(x)), static_cast<Eigen::Index>(n) - 1);
    return x - static_cast<double>(cell);
  };
  Eigen::Index i = 0, j = 0;
  double const u = at(theta1, i);
  double const v = at(theta2, j);

  double slope = 0.0, density = 0.0;
  for (auto const &[m, w] : model.action_weights(action))
  {
    auto const bilinear = [&](Eigen::MatrixXd const &t) {
      return (1 - u) * (1 - v) * t(i, j) + u * (1 - v) * t(i + 1, j) + (1 - u) * v * t(i, j + 1) +
             u * v * t(i + 1, j + 1);
    };
    slope += w * bilinear(model.cdf2_slope_node(m));
    density += w * bilinear(model.density2_node(m));
  }
  if (!(density >= kDensityFloor))
  {
    throw DensityZero("f2 vanishes where the impulse response is evaluated", theta1, theta2);
  }
  return -slope / density;
}

VirtualValues virtual_values(ScreeningModel const &model, DecisionRules const &rules)
{
  check_rules(model, rules);
  Eigen::Index const    n    = model.nodes();
  Eigen::VectorXd const tail = upper_tail(model);
  auto const           &grid = model.grid();
  auto const           &f1   = model.f1();

  VirtualValues out;
  out.psi1.resize(n);
  Eigen::VectorXd hazard(n);
  for (Eigen::Index i = 0; i < n; ++i)
  {
    if (f1(i) < kDensityFloor)
    {
      if (tail(i) != 0.0)
      {
        throw DensityZero("f1 vanishes inside the type interval", grid(i), kNaN);
      }
      hazard(i) = 0.0;
    }
    else
    {
      hazard(i) = tail(i) / f1(i);
    }
    out.psi1(i) = grid(i) - hazard(i);
  }

  auto const            f2_tables    = node_tables(model, &ScreeningModel::density2_node);
  auto const            slope_tables = node_tables(model, &ScreeningModel::cdf2_slope_node);
  Eigen::MatrixXd const f2           = conditioned(model, f2_tables, rules.first);
  Eigen::MatrixXd const slope        = conditioned(model, slope_tables, rules.first);
  out.psi2.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
  {
    for (Eigen::Index j = 0; j < n; ++j)
    {
      if (f2(i, j) < kDensityFloor)
      {
        throw DensityZero("f2 vanishes where psi2 is evaluated", grid(i), grid(j));
      }
      out.psi2(i, j) = grid(j) + hazard(i) * slope(i, j) / f2(i, j);
    }
  }
  return out;
}

double seller_revenue(ScreeningModel const &model, DecisionRules const &rules, double u1_base)
{
  require_trading(model, "seller revenue");
  auto const            psi = virtual_values(model, rules);
  auto const           &w   = model.weights();
  auto const           &f1  = model.f1();
  Eigen::MatrixXd const f2  = conditioned(model, node_tables(model, &ScreeningModel::density2_node), rules.first);

  double const first  = (w.array() * psi.psi1.array() * rules.first.array() * f1.array()).sum();
  Eigen::VectorXd const inner =
    (psi.psi2.array() * rules.second.array() * f2.array()).matrix() * w;  // over theta_2
  double const second = (w.array() * f1.array() * inner.array()).sum();
  return first + model.discount() * second - u1_base;
}

Eigen::VectorXd u1_envelope(ScreeningModel const &model, DecisionRules const &rules, double u1_base)
{
  check_rules(model, rules);
  Eigen::Index const    n     = model.nodes();
  auto const           &grid  = model.grid();
  auto const           &w     = model.weights();
  auto const           &v     = model.valuation();
  Eigen::MatrixXd const slope = conditioned(model, node_tables(model, &ScreeningModel::cdf2_slope_node), rules.first);
  Eigen::MatrixXd const v2    = tabulate_second(model, rules.second, v.slope);

  Eigen::VectorXd integrand(n);
  Eigen::VectorXd const feedback = (v2.array() * slope.array()).matrix() * w;
  for (Eigen::Index i = 0; i < n; ++i)
  {
    integrand(i) = v.slope(grid(i), rules.first(i)) - model.discount() * feedback(i);
  }
  return (cumulative_trapezoid(integrand, model.step()).array() + u1_base).matrix();
}

PaymentIdentity payment_identity(ScreeningModel const &model, DecisionRules const &rules, double u1_base)
{
  check_rules(model, rules);
  Eigen::Index const    n     = model.nodes();
  auto const           &grid  = model.grid();
  auto const           &w     = model.weights();
  auto const           &f1    = model.f1();
  auto const           &v     = model.valuation();
  Eigen::VectorXd const tail  = upper_tail(model);
  Eigen::MatrixXd const f2    = conditioned(model, node_tables(model, &ScreeningModel::density2_node), rules.first);
  Eigen::MatrixXd const slope = conditioned(model, node_tables(model, &ScreeningModel::cdf2_slope_node), rules.first);
  Eigen::MatrixXd const v2    = tabulate_second(model, rules.second, v.value);
  Eigen::MatrixXd const dv2   = tabulate_second(model, rules.second, v.slope);
  Eigen::VectorXd const u1    = u1_envelope(model, rules, u1_base);

  Eigen::VectorXd value1(n), slope1(n);
  for (Eigen::Index i = 0; i < n; ++i)
  {
    value1(i) = v.value(grid(i), rules.first(i));
    slope1(i) = v.slope(grid(i), rules.first(i));
  }
  Eigen::VectorXd const value2 = (v2.array() * f2.array()).matrix() * w;
  Eigen::VectorXd const rent2  = (dv2.array() * slope.array()).matrix() * w;
  double const          delta  = model.discount();

  PaymentIdentity out;
  out.direct = (w.array() * f1.array() * (value1.array() + delta * value2.array() - u1.array())).sum();
  out.virtual_form = (w.array() * (f1.array() * value1.array() - slope1.array() * tail.array())).sum() +
                     delta * (w.array() * (f1.array() * value2.array() + tail.array() * rent2.array())).sum() -
                     u1_base;
  out.discrepancy = std::abs(out.direct - out.virtual_form);
  return out;
}

double payment_identity_check(ScreeningModel const &model, DecisionRules const &rules, double u1_base)
{
  return payment_identity(model, rules, u1_base).discrepancy;
}

double check_ic1_integral(ScreeningModel const &model, DecisionRules const &rules)
{
  check_rules(model, rules);
  Eigen::Index const n     = model.nodes();
  double const       h     = model.step();
  double const       delta = model.discount();
  auto const        &grid  = model.grid();
  auto const        &w     = model.weights();
  auto const        &v     = model.valuation();

  // Truthful side: cumulative integral of the envelope integrand.
  Eigen::VectorXd const envelope = u1_envelope(model, rules, 0.0);

  // Report-l side, first term: int_{theta_l}^{theta_k} v_theta(t, a_1(theta_l)) dt.
  Eigen::MatrixXd first(n, n);
  for (Eigen::Index l = 0; l < n; ++l)
  {
    Eigen::VectorXd s(n);
    for (Eigen::Index k = 0; k < n; ++k)
    {
      s(k) = v.slope(grid(k), rules.first(l));
    }
    Eigen::VectorXd const c = cumulative_trapezoid(s, h);
    first.col(l)            = (c.array() - c(l)).matrix();
  }

  // Second term with the theta_1 integral done exactly:
  // int v_theta(t2, a_2(l, t2)) [F_2(t2 | theta_k, a_1(l)) - F_2(t2 | theta_l, a_1(l))] dt2.
  Eigen::MatrixXd const dv2 = tabulate_second(model, rules.second, v.slope) * w.asDiagonal();
  Eigen::MatrixXd const g   = mixed_product(model, node_tables(model, &ScreeningModel::cdf2_node), dv2, rules.first);

  double worst = -std::numeric_limits<double>::infinity();
  for (Eigen::Index l = 0; l < n; ++l)
  {
    for (Eigen::Index k = 0; k < n; ++k)
    {
      double const lhs = envelope(k) - envelope(l);
      double const rhs = first(k, l) - delta * (g(k, l) - g(l, l));
      worst            = std::max(worst, rhs - lhs);
    }
  }
  return worst;
}

DecisionRules optimal_rules(ScreeningModel const &model)
{
  require_trading(model, "optimal rules");
  Eigen::Index const n    = model.nodes();
  auto const        &grid = model.grid();

  DecisionRules rules;
  rules.first  = Eigen::VectorXd::Zero(n);
  rules.second = Eigen::MatrixXd::Zero(n, n);
  // psi_1 does not involve the rules.
  Eigen::VectorXd const psi1 = virtual_values(model, rules).psi1;
  double const          tol1 = 1e-9 * (1.0 + psi1.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i + 1 < n; ++i)
  {
    if (psi1(i + 1) < psi1(i) - tol1)
    {
      std::ostringstream msg;
      msg << "psi1 decreases between theta1 = " << grid(i) << " and " << grid(i + 1);
      throw NotRegular(msg.str(), grid(i), kNaN);
    }
  }
  for (Eigen::Index i = 0; i < n; ++i)
  {
    rules.first(i) = psi1(i) >= 0.0 ? 1.0 : 0.0;
  }

  Eigen::MatrixXd const psi2 = virtual_values(model, rules).psi2;
  double const          tol2 = 1e-9 * (1.0 + psi2.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < n; ++i)
  {
    for (Eigen::Index j = 0; j < n; ++j)
    {
      if (j + 1 < n && psi2(i, j + 1) < psi2(i, j) - tol2)
      {
        std::ostringstream msg;
        msg << "psi2 decreases in theta2 at (" << grid(i) << ", " << grid(j) << ")";
        throw NotRegular(msg.str(), grid(i), grid(j));
      }
      if (i + 1 < n && psi2(i + 1, j) < psi2(i, j) - tol2)
      {
        std::ostringstream msg;
        msg << "psi2 decreases in theta1 at (" << grid(i) << ", " << grid(j) << ")";
        throw NotRegular(msg.str(), grid(i), grid(j));
      }
      rules.second(i, j) = psi2(i, j) >= 0.0 ? 1.0 : 0.0;
    }
  }
  return rules;
}

Transfers reconstruct_transfers(ScreeningModel const &model, DecisionRules const &rules, double u1_base)
{
  check_rules(model, rules);
  Eigen::Index const n    = model.nodes();
  auto const        &grid = model.grid();
  auto const        &w    = model.weights();
  auto const        &v    = model.valuation();

  Eigen::MatrixXd u2(n, n);
  for (Eigen::Index k = 0; k < n; ++k)
  {
    u2.row(k) = u2_envelope(model, rules, static_cast<std::size_t>(k), 0.0).transpose();
  }
  Transfers out;
  out.second = tabulate_second(model, rules.second, v.value) - u2;
  out.u1     = u1_envelope(model, rules, u1_base);

  Eigen::MatrixXd const f2         = conditioned(model, node_tables(model, &ScreeningModel::density2_node), rules.first);
  Eigen::VectorXd const continuing = (u2.array() * f2.array()).matrix() * w;
  out.first.resize(n);
  for (Eigen::Index k = 0; k < n; ++k)
  {
    out.first(k) = v.value(grid(k), rules.first(k)) + model.discount() * continuing(k) - out.u1(k);
  }
  return out;
}

Eigen::MatrixXd ic1_direct_gains(ScreeningModel const &model, DecisionRules const &rules, Transfers const &transfers)
{
  check_rules(model, rules);
  Eigen::Index const n    = model.nodes();
  auto const        &grid = model.grid();
  auto const        &w    = model.weights();
  auto const        &v    = model.valuation();

  // Period-2 truthful payoff after report l: U_2(j; l) = v(theta_j, a_2(l, j)) - tau_2(l, j).
  Eigen::MatrixXd const u2 = tabulate_second(model, rules.second, v.value) - transfers.second;
  Eigen::MatrixXd const e =
    mixed_product(model, node_tables(model, &ScreeningModel::density2_node), u2 * w.asDiagonal(), rules.first);

  Eigen::MatrixXd payoff(n, n);
  for (Eigen::Index l = 0; l < n; ++l)
  {
    for (Eigen::Index k = 0; k < n; ++k)
    {
      payoff(k, l) = v.value(grid(k), rules.first(l)) - transfers.first(l) + model.discount() * e(k, l);
    }
  }
  Eigen::VectorXd const truthful = payoff.diagonal();
  return payoff.colwise() - truthful;
}

double ic2_max_gain(ScreeningModel const &model, DecisionRules const &rules, Transfers const &transfers)
{
  check_rules(model, rules);
  Eigen::Index const n    = model.nodes();
  auto const        &grid = model.grid();
  auto const        &v    = model.valuation();

  double worst = -std::numeric_limits<double>::infinity();
  for (Eigen::Index l = 0; l < n; ++l)
  {
    // payoff(j, r): true theta_j reports theta_r.
    Eigen::MatrixXd payoff(n, n);
    if (v.trading)
    {
      payoff = grid * rules.second.row(l);
      payoff.rowwise() -= transfers.second.row(l);
    }
    else
    {
      for (Eigen::Index j = 0; j < n; ++j)
      {
        for (Eigen::Index r = 0; r < n; ++r)
        {
          payoff(j, r) = v.value(grid(j), rules.second(l, r)) - transfers.second(l, r);
        }
      }
    }
    Eigen::VectorXd const truthful = payoff.diagonal();
    worst                          = std::max(worst, (payoff.colwise() - truthful).maxCoeff());
  }
  return worst;
}

namespace fixtures {

ScreeningModel uniform(std::size_t intervals, double discount)
{
  return ScreeningModel::from_functions(
    0.0, 1.0, intervals, [](double) { return 1.0; }, [](double, double, double) { return 1.0; }, {0.0}, discount);
}

ScreeningModel fgm(std::size_t intervals, double gamma, double discount)
{
  if (!(std::abs(gamma) <= 1.0))
  {
    throw InvalidArgument("FGM dependence parameter must satisfy |gamma| <= 1");
  }
  return ScreeningModel::from_functions(
    0.0, 1.0, intervals, [](double) { return 1.0; },
    [gamma](double t1, double t2, double) { return 1.0 + gamma * (2.0 * t1 - 1.0) * (2.0 * t2 - 1.0); }, {0.0},
    discount);
}

ScreeningModel mixture(std::size_t intervals, double gamma, double discount)
{
  if (!(std::abs(gamma) <= 1.0))
  {
    throw InvalidArgument("FGM dependence parameter must satisfy |gamma| <= 1");
  }
  return ScreeningModel::from_functions(
    0.0, 1.0, intervals, [](double) { return 1.0; },
    [gamma](double t1, double t2, double a) {
      return (1.0 - a) + a * (1.0 + gamma * (2.0 * t1 - 1.0) * (2.0 * t2 - 1.0));
    },
    {0.0, 1.0}, discount);
}

ScreeningModel bimodal(std::size_t intervals, double discount)
{
  if (intervals < 2)
  {
    throw InvalidArgument("type grid needs at least two intervals");
  }
  auto const   n     = static_cast<Eigen::Index>(intervals) + 1;
  double const h     = 1.0 / static_cast<double>(intervals);
  auto const   hump  = [](double t, double c) { return std::exp(-0.5 * (t - c) * (t - c) / (0.07 * 0.07)); };
  Eigen::VectorXd f1(n);
  for (Eigen::Index k = 0; k < n; ++k)
  {
    double const t = static_cast<double>(k) * h;
    f1(k)          = 0.01 + hump(t, 0.2) + hump(t, 0.8);
  }
  f1 /= trapezoid_sum(f1, h);
  std::vector<Eigen::MatrixXd> f2{Eigen::MatrixXd::Ones(n, n)};
  return ScreeningModel(0.0, 1.0, std::move(f1), std::move(f2), {0.0}, discount);
}

}  // namespace fixtures

}  // namespace mechdyn::screening
