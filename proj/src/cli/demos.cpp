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

#include "mechdyn/cli.hpp"

#include "mechdyn/bilateral.hpp"
#include "mechdyn/markov.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <sstream>

namespace mechdyn::cli {

namespace {

using bilateral::TradeModel;
using markov::DistributionVector;
using markov::StochasticMatrix;

std::string fmt(double v) { return format_number(v); }

// Short form for check names.
std::string label(double v)
{
  std::ostringstream out;
  out << v;
  return out.str();
}

TradeModel two_state(double alpha, double delta)
{
  auto const p = StochasticMatrix::symmetric_two_state(alpha);
  return TradeModel({0.0, 1.0}, p, p, DistributionVector::uniform(2), DistributionVector::uniform(2), delta);
}

Report uniform_two_period(DemoOptions const &options)
{
  std::size_t const n = options.grid.value_or(2000);
  double const      tol = 1e-6;
  auto const        r   = bilateral::uniform_two_period_report(n);

  Report report;
  report.inputs = Json{{"grid", n}, {"persistence", "independent"}};
  double const expected_fee = 1.0 / 6.0;
  report.add("deficit_t0", r.deficit_t0, tol);
  report.add("deficit_t1", r.deficit_t1, tol);
  report.add("expected_z_seller_t1", r.expected_z_seller[1], tol);
  report.add("expected_z_buyer_t1", r.expected_z_buyer[1], tol);
  report.add("max_fee_seller", r.max_fee_seller, tol);
  report.add("max_fee_buyer", r.max_fee_buyer, tol);
  report.add("residual_deficit", r.residual_deficit, tol);
  report.expect_near("deficit per period t=0", r.deficit_t0, 1.0 / 6.0, tol);
  report.expect_near("deficit per period t=1", r.deficit_t1, 1.0 / 6.0, tol);
  report.expect_near("E[z_s] in period 1", r.expected_z_seller[1], -1.0 / 3.0, tol);
  report.expect_near("E[z_b] in period 1", r.expected_z_buyer[1], 1.0 / 6.0, tol);
  report.expect_near("feasible seller fee", r.max_fee_seller, expected_fee, tol);
  report.expect_near("feasible buyer fee", r.max_fee_buyer, expected_fee, tol);
  report.expect_near("deficit covered by the fees", r.residual_deficit, 0.0, 2.0 * tol);
  return report;
}

Report persistent_two_period(DemoOptions const &options)
{
  std::size_t const n   = options.grid.value_or(2000);
  double const      tol = 1e-6;
  auto const        r   = bilateral::uniform_two_period_report(n, bilateral::Persistence::persistent);

  Report report;
  report.inputs = Json{{"grid", n}, {"persistence", "persistent"}};
  report.add("total_deficit", r.total_deficit, tol);
  report.add("max_fee_seller", r.max_fee_seller, tol);
  report.add("max_fee_buyer", r.max_fee_buyer, tol);
  report.add("seller_payoff_at_1", r.seller_payoff(r.seller_payoff.size() - 1), tol);
  report.add("buyer_payoff_at_0", r.buyer_payoff(0), tol);
  report.expect_near("total deficit", r.total_deficit, 1.0 / 3.0, tol);
  report.expect_near("seller payoff at theta_s = 1", r.seller_payoff(r.seller_payoff.size() - 1), 0.0, tol);
  report.expect_near("buyer payoff at theta_b = 0", r.buyer_payoff(0), 0.0, tol);
  report.expect_near("maximum chargeable fee", r.max_fee_seller + r.max_fee_buyer, 0.0, tol);
  return report;
}

Report discrete_two_period(DemoOptions const &, std::uint64_t seed)
{
  Report report;
  report.inputs = Json{{"values", {0.0, 1.0}}, {"x", {0.5, 0.5}}, {"y", {0.5, 0.5}}, {"horizon", 2}, {"discount", 1.0},
                       {"random_chains", 200}};

  Table sweep{"alpha_sweep", {"alpha", "deficit", "seller_floor", "buyer_floor", "slack", "holds"}, {}};
  bool  all_match = true;
  std::string mismatches;
  double boundary_slack = 0.0;
  for (int k = 0; k <= 10; ++k)
  {
    double const alpha = k / 10.0;
    auto const   r     = bilateral::finite_horizon_report(two_state(alpha, 0.0), 2, 1.0);
    sweep.rows.push_back({alpha, r.deficit, r.seller_floor, r.buyer_floor, r.slack, r.holds});
    if (r.holds != (alpha <= 0.5))
    {
      all_match = false;
      mismatches += " alpha=" + label(alpha);
    }
    if (k == 5)
    {
      boundary_slack = r.slack;
    }
  }
  report.tables.push_back(std::move(sweep));
  report.add("boundary_slack", boundary_slack, 1e-12);
  report.expect_true("holds exactly when alpha <= 1/2", all_match, mismatches.empty() ? "" : "mismatch at" + mismatches);
  report.expect_near("slack at alpha = 1/2", boundary_slack, 0.0, 1e-12);

  // Positively correlated chains: every draw must fail the two-period check.
  std::mt19937_64                        rng(seed);
  std::uniform_real_distribution<double> stay(0.5, 1.0);
  int                                    failures = 0;
  int                                    drawn    = 0;
  double                                 worst    = -std::numeric_limits<double>::infinity();
  while (drawn < 200)
  {
    double const s00 = stay(rng), s11 = stay(rng), b00 = stay(rng), b11 = stay(rng);
    StochasticMatrix const ps(std::vector<std::vector<double>>{{s00, 1.0 - s00}, {1.0 - s11, s11}});
    StochasticMatrix const pb(std::vector<std::vector<double>>{{b00, 1.0 - b00}, {1.0 - b11, b11}});
    if (!bilateral::positively_correlated_impossible(ps, pb))
    {
      continue;
    }
    ++drawn;
    TradeModel const model({0.0, 1.0}, ps, pb, DistributionVector::uniform(2), DistributionVector::uniform(2), 0.0);
    auto const       r = bilateral::finite_horizon_report(model, 2, 1.0);
    failures += r.holds ? 0 : 1;
    worst = std::max(worst, r.slack);
  }
  report.add("random_chain_failures", failures, 0.0);
  report.add("largest_random_slack", worst, bilateral::kHoldsTolerance);
  report.expect_true("positively correlated chains never balance", failures == drawn,
                     std::to_string(failures) + " of " + std::to_string(drawn) + " fail");
  return report;
}

Report two_state_infinite(DemoOptions const &options)
{
  double const alpha = options.alpha.value_or(0.5);
  double const delta = options.delta.value_or(0.6);
  double const step  = 1e-4;

  Report report;
  report.inputs = Json{{"alpha", alpha}, {"discount", delta}, {"grid_step", step}};
  auto const r  = bilateral::condition_star(two_state(alpha, delta));

  double const base     = 1.0 / (1.0 - delta);
  double const rho      = 1.0 / (1.0 - delta * (2.0 * alpha - 1.0));
  double const boundary = 1.0 / (3.0 - 2.0 * alpha);
  report.add("deficit", r.deficit, r.tail_bound);
  report.add("seller_payoff_low", r.seller_payoffs(0), r.tail_bound);
  report.add("seller_payoff_high", r.seller_payoffs(1), r.tail_bound);
  report.add("slack", r.slack, r.tail_bound);
  report.add("holds", r.holds, bilateral::kHoldsTolerance);
  report.add("closed_form_threshold", boundary, 0.0);
  report.expect_near("deficit 1/(4(1-delta))", r.deficit, 0.25 * base, std::max(r.tail_bound, 1e-10) + 1e-12 * base);
  report.expect_near("seller payoff at v_1", r.seller_payoffs(0), 0.25 * (base + rho), 1e-9);
  report.expect_near("seller payoff at v_2", r.seller_payoffs(1), 0.25 * (base - rho), 1e-9);
  // Away from the boundary the verdict must follow the closed form.
  bool const expected = delta >= boundary;
  report.expect_true("condition (*) verdict matches delta >= 1/(3-2 alpha)",
                     std::abs(delta - boundary) < 1e-9 || r.holds == expected,
                     "holds=" + std::string(r.holds ? "true" : "false"));

  Table thresholds{"thresholds", {"alpha", "delta_star", "closed_form", "monotone"}, {}};
  for (double a : {0.25, 0.5, 0.75})
  {
    auto const   t    = bilateral::delta_threshold(two_state(a, 0.0), step);
    double const form = 1.0 / (3.0 - 2.0 * a);
    thresholds.rows.push_back({a, t.threshold ? Json(*t.threshold) : Json("none"), form, t.monotone});
    report.expect_near("delta* at alpha = " + label(a), t.threshold.value_or(1.0), form, 2.0 * step,
                       t.threshold ? "" : "no threshold found");
  }
  report.tables.push_back(std::move(thresholds));
  return report;
}

Report perfect_correlation(DemoOptions const &)
{
  Report report;
  std::vector<double> const deltas{0.5, 0.9, 0.99, 0.999};
  report.inputs = Json{{"values", {0.0, 0.5, 1.0}}, {"chains", "identity"}, {"discounts", deltas}};

  auto const id = StochasticMatrix::identity(3);
  Table      table{"sweep", {"x", "delta", "deficit", "seller_floor", "buyer_floor", "slack", "holds"}, {}};
  for (double d : deltas)
  {
    TradeModel const model({0.0, 0.5, 1.0}, id, id, DistributionVector::uniform(3), DistributionVector::uniform(3), d);
    auto const       r = bilateral::condition_star(model);
    table.rows.push_back({"uniform", d, r.deficit, r.seller_floor, r.buyer_floor, r.slack, r.holds});
    report.expect_true("fails at delta = " + label(d), !r.holds, "slack " + fmt(r.slack));
  }
  // The seller always holds the top value: no trading pair carries mass.
  DistributionVector const top = DistributionVector::point_mass(3, 2);
  for (double d : deltas)
  {
    TradeModel const model({0.0, 0.5, 1.0}, id, id, top, DistributionVector::uniform(3), d);
    auto const       r = bilateral::condition_star(model);
    table.rows.push_back({"point mass at v_K", d, r.deficit, r.seller_floor, r.buyer_floor, r.slack, r.holds});
    report.expect_true("vacuous hold at delta = " + label(d), r.holds && r.deficit == 0.0, "deficit " + fmt(r.deficit));
  }
  report.tables.push_back(std::move(table));
  return report;
}

Report iid_uniform(DemoOptions const &)
{
  std::size_t const   k    = 3;
  double const        step = 1e-4;
  std::vector<double> values{0.0, 0.5, 1.0};
  Report              report;
  report.inputs = Json{{"values", values}, {"chains", "uniform"}, {"x", "uniform"}, {"y", "uniform"}, {"grid_step", step}};

  auto const uniform = StochasticMatrix::uniform(k);
  TradeModel const model(values, uniform, uniform, DistributionVector::uniform(k), DistributionVector::uniform(k), 0.0);

  double weighted = 0.0;
  double total    = 0.0;
  for (std::size_t i = 0; i < k; ++i)
  {
    for (std::size_t j = i + 1; j < k; ++j)
    {
      weighted += (values[j] - values[i]) * model.x()[i] * model.y()[j];
      total += values[j] - values[i];
    }
  }
  double const kk   = static_cast<double>(k * k);
  double const form = kk * weighted / (kk * weighted + total);
  auto const   t    = bilateral::delta_threshold(model, step);
  report.add("delta_star", t.threshold ? Json(*t.threshold) : Json("none"), step);
  report.add("closed_form", form, 0.0);
  report.add("monotone", t.monotone, 0.0);
  report.expect_near("delta* against the closed-form bound", t.threshold.value_or(1.0), form, 2.0 * step,
                     t.threshold ? "" : "no threshold found");
  return report;
}

Report diverse_preference(DemoOptions const &)
{
  double const step = 1e-3;
  Report       report;
  report.inputs = Json{{"sizes", {2, 3, 4}}, {"base_chains", "uniform"}, {"x", "uniform"}, {"y", "uniform"},
                       {"grid_step", step}};
  Table table{"models", {"K", "seller_floor", "buyer_floor", "grid_points", "holding_points", "irreducible"}, {}};
  for (std::size_t k : {2, 3, 4})
  {
    std::vector<double> values(k);
    for (std::size_t i = 0; i < k; ++i)
    {
      values[i] = static_cast<double>(i) / static_cast<double>(k - 1);
    }
    auto const base  = StochasticMatrix::uniform(k);
    auto const model = bilateral::diverse_preference_model(values, base, base, DistributionVector::uniform(k),
                                                           DistributionVector::uniform(k), 0.5);
    auto const r     = bilateral::condition_star(model);
    auto const t     = bilateral::delta_threshold(model, step);
    std::size_t holding = 0;
    for (auto const &p : t.sweep)
    {
      holding += p.holds ? 1 : 0;
    }
    bool const irreducible = markov::classify_chain(model.seller()).irreducible;
    table.rows.push_back({k, r.seller_floor, r.buyer_floor, t.sweep.size(), holding, irreducible});
    std::string const tag = "K = " + std::to_string(k);
    report.expect_true("floors exactly zero, " + tag, r.seller_floor == 0.0 && r.buyer_floor == 0.0,
                       "floors " + fmt(r.seller_floor) + ", " + fmt(r.buyer_floor));
    report.expect_true("condition (*) fails at every grid delta, " + tag, holding == 0 && !t.threshold,
                       std::to_string(holding) + " grid points hold");
  }
  report.tables.push_back(std::move(table));
  return report;
}

using DemoFn = std::function<Report(DemoOptions const &, std::uint64_t)>;

std::map<std::string, DemoFn> const &registry()
{
  static std::map<std::string, DemoFn> const demos{
    {"uniform-two-period", [](DemoOptions const &o, std::uint64_t) { return uniform_two_period(o); }},
    {"persistent-two-period", [](DemoOptions const &o, std::uint64_t) { return persistent_two_period(o); }},
    {"discrete-two-period", [](DemoOptions const &o, std::uint64_t s) { return discrete_two_period(o, s); }},
    {"two-state-infinite", [](DemoOptions const &o, std::uint64_t) { return two_state_infinite(o); }},
    {"iid-uniform-K", [](DemoOptions const &o, std::uint64_t) { return iid_uniform(o); }},
    {"perfect-correlation", [](DemoOptions const &o, std::uint64_t) { return perfect_correlation(o); }},
    {"diverse-preference", [](DemoOptions const &o, std::uint64_t) { return diverse_preference(o); }},
  };
  return demos;
}

}  // namespace

std::vector<std::string> demo_names()
{
  // Registry order would be alphabetical; list them in the order they build on each other.
  return {"uniform-two-period", "persistent-two-period", "discrete-two-period", "two-state-infinite",
          "perfect-correlation", "iid-uniform-K",        "diverse-preference"};
}

Report cmd_demo(std::string const &name, DemoOptions const &options)
{
  auto const &demos = registry();
  auto        it    = demos.find(name);
  if (it == demos.end())
  {
    std::string known;
    for (auto const &n : demo_names())
    {
      known += (known.empty() ? "" : ", ") + n;
    }
    throw UnknownDemo("unknown demo '" + name + "' (known: " + known + ")");
  }
  std::uint64_t const seed = effective_seed(1);
  Report              report = it->second(options, seed);
  report.command = "demo " + name;
  report.seed    = seed;
  return report;
}

}  // namespace mechdyn::cli
