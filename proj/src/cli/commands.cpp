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

#include "mechdyn/groves.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace mechdyn::cli {

namespace {

std::string fmt(double v) { return format_number(v); }

std::string label(double v)
{
  std::ostringstream out;
  out << v;
  return out.str();
}

void require_kind(Scenario const &scenario, std::initializer_list<char const *> kinds, char const *command)
{
  for (char const *k : kinds)
  {
    if (scenario.kind == k)
    {
      return;
    }
  }
  throw ParseError(std::string("scenario kind '") + scenario.kind + "' is not accepted by " + command, "kind");
}

Json option(std::optional<double> const &v) { return v ? Json(*v) : Json(nullptr); }

// Uniform double in [0, 1) from the top 53 bits, independent of the standard library.
double unit(std::mt19937_64 &rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::size_t sample(Eigen::VectorXd const &cumulative, double u)
{
  auto const *begin = cumulative.data();
  auto const *end   = begin + cumulative.size();
  auto const *it    = std::upper_bound(begin, end, u);
  return std::min(static_cast<std::size_t>(it - begin), static_cast<std::size_t>(cumulative.size() - 1));
}

Eigen::VectorXd cumulative(Eigen::VectorXd const &p)
{
  Eigen::VectorXd c(p.size());
  double          acc = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i)
  {
    acc += p(i);
    c(i) = acc;
  }
  return c;
}

struct MonteCarlo
{
  double             mean{0.0};
  double             standard_error{0.0};
  unsigned long long horizon{0};
  double             tail{0.0};
};

// Simulated discounted deficit of the pivot mechanism, truncated at the horizon
// where the remaining discounted surplus falls below 1e-6.
MonteCarlo simulate_deficit(bilateral::TradeModel const &model, std::size_t paths, std::uint64_t seed)
{
  std::size_t const k     = model.size();
  double const      delta = model.discount();
  MonteCarlo        mc;
  mc.horizon = bilateral::series_horizon(model, 1e-6);
  mc.tail    = delta == 0.0 ? 0.0 : std::pow(delta, static_cast<double>(mc.horizon)) * model.span() / (1.0 - delta);

  Eigen::VectorXd const        cx = cumulative(model.x().vector());
  Eigen::VectorXd const        cy = cumulative(model.y().vector());
  std::vector<Eigen::VectorXd> cs, cb;
  for (std::size_t i = 0; i < k; ++i)
  {
    cs.push_back(cumulative(model.seller().row(i).vector()));
    cb.push_back(cumulative(model.buyer().row(i).vector()));
  }
  auto const &v = model.values();

  std::mt19937_64 rng(seed);
  double          sum = 0.0, sum_sq = 0.0;
  for (std::size_t p = 0; p < paths; ++p)
  {
    std::size_t s = sample(cx, unit(rng));
    std::size_t b = sample(cy, unit(rng));
    double      weight = 1.0, total = 0.0;
    for (unsigned long long t = 0; t < mc.horizon; ++t)
    {
      if (v[b] > v[s])
      {
        total += weight * (v[b] - v[s]);
      }
      weight *= delta;
      s = sample(cs[s], unit(rng));
      b = sample(cb[b], unit(rng));
    }
    sum += total;
    sum_sq += total * total;
  }
  double const n = static_cast<double>(paths);
  mc.mean        = sum / n;
  double const variance = paths > 1 ? std::max(0.0, (sum_sq - n * mc.mean * mc.mean) / (n - 1.0)) : 0.0;
  mc.standard_error     = std::sqrt(variance / n);
  return mc;
}

Table payoff_table(bilateral::TradeModel const &model, bilateral::BudgetReport const &r)
{
  Table t{"payoffs", {"value", "seller_payoff", "buyer_payoff"}, {}};
  for (std::size_t i = 0; i < model.size(); ++i)
  {
    auto const e = static_cast<Eigen::Index>(i);
    t.rows.push_back({model.values()[i], r.seller_payoffs(e), r.buyer_payoffs(e)});
  }
  return t;
}

void add_budget(Report &report, bilateral::BudgetReport const &r)
{
  double const tail = r.tail_bound;
  report.add("deficit", r.deficit, tail);
  report.add("seller_floor", r.seller_floor, tail);
  report.add("buyer_floor", r.buyer_floor, tail);
  report.add("slack", r.slack, 3.0 * tail);
  report.add("holds", r.holds, bilateral::kHoldsTolerance);
  report.add("fee_seller", r.fee_seller ? Json(*r.fee_seller) : Json("none"), tail);
  report.add("fee_buyer", r.fee_buyer ? Json(*r.fee_buyer) : Json("none"), tail);
  report.add("discount", r.discount, 0.0);
  report.add("horizon", r.horizon, 0.0);
  report.add("tail_bound", r.tail_bound, 0.0);
}

std::vector<Eigen::VectorXd> player_tables(Json const &doc, std::string const &key, std::string const &file)
{
  if (!doc.is_object() || !doc.contains("schema") || doc["schema"] != kSchemaVersion)
  {
    throw ParseError("expected schema 1", file + ":schema");
  }
  if (!doc.contains(key) || !doc[key].is_array())
  {
    throw ParseError("expected an array with one table per player", file + ":" + key);
  }
  std::vector<Eigen::VectorXd> tables;
  for (std::size_t i = 0; i < doc[key].size(); ++i)
  {
    Json const &row = doc[key][i];
    std::string const where = file + ":" + key + "[" + std::to_string(i) + "]";
    if (!row.is_array())
    {
      throw ParseError("expected an array of numbers", where);
    }
    Eigen::VectorXd v(static_cast<Eigen::Index>(row.size()));
    for (std::size_t j = 0; j < row.size(); ++j)
    {
      if (!row[j].is_number())
      {
        throw ParseError("expected a number", where + "[" + std::to_string(j) + "]");
      }
      v(static_cast<Eigen::Index>(j)) = row[j].get<double>();
    }
    tables.push_back(std::move(v));
  }
  return tables;
}

std::string profile_label(mdp::ProfileSpace const &space, mdp::ProfileIndex profile)
{
  std::string out = "(";
  auto const  types = space.decode(profile);
  for (std::size_t i = 0; i < types.size(); ++i)
  {
    out += (i ? "," : "") + std::to_string(types[i]);
  }
  return out + ")";
}

screening::DecisionRules parse_rules(Json const &doc, screening::ScreeningModel const &model, std::string const &file)
{
  if (!doc.is_object() || !doc.contains("schema") || doc["schema"] != kSchemaVersion)
  {
    throw ParseError("expected schema 1", file + ":schema");
  }
  Eigen::Index const n    = model.nodes();
  auto const        &grid = model.grid();
  screening::DecisionRules rules;
  rules.first  = Eigen::VectorXd::Zero(n);
  rules.second = Eigen::MatrixXd::Zero(n, n);
  if (doc.contains("q1_threshold") || doc.contains("q2_threshold"))
  {
    if (!doc.contains("q1_threshold") || !doc["q1_threshold"].is_number() || !doc.contains("q2_threshold") ||
        !doc["q2_threshold"].is_number())
    {
      throw ParseError("threshold rules need numeric q1_threshold and q2_threshold", file);
    }
    double const t1 = doc["q1_threshold"].get<double>();
    double const t2 = doc["q2_threshold"].get<double>();
    for (Eigen::Index i = 0; i < n; ++i)
    {
      rules.first(i) = grid(i) >= t1 ? 1.0 : 0.0;
      for (Eigen::Index j = 0; j < n; ++j)
      {
        rules.second(i, j) = grid(j) >= t2 ? 1.0 : 0.0;
      }
    }
    return rules;
  }
  if (!doc.contains("q1") || !doc["q1"].is_array() || doc["q1"].size() != static_cast<std::size_t>(n))
  {
    throw ParseError("q1 needs one entry per grid node (" + std::to_string(n) + ")", file + ":q1");
  }
  if (!doc.contains("q2") || !doc["q2"].is_array() || doc["q2"].size() != static_cast<std::size_t>(n))
  {
    throw ParseError("q2 needs one row per grid node (" + std::to_string(n) + ")", file + ":q2");
  }
  for (Eigen::Index i = 0; i < n; ++i)
  {
    Json const &q1 = doc["q1"][static_cast<std::size_t>(i)];
    if (!q1.is_number())
    {
      throw ParseError("expected a number", file + ":q1[" + std::to_string(i) + "]");
    }
    rules.first(i) = q1.get<double>();
    Json const &row = doc["q2"][static_cast<std::size_t>(i)];
    std::string const where = file + ":q2[" + std::to_string(i) + "]";
    if (!row.is_array() || row.size() != static_cast<std::size_t>(n))
    {
      throw ParseError("row needs one entry per grid node", where);
    }
    for (Eigen::Index j = 0; j < n; ++j)
    {
      if (!row[static_cast<std::size_t>(j)].is_number())
      {
        throw ParseError("expected a number", where + "[" + std::to_string(j) + "]");
      }
      rules.second(i, j) = row[static_cast<std::size_t>(j)].get<double>();
    }
  }
  return rules;
}

// Pointwise thresholds of the virtual values, used when they are not monotone.
screening::DecisionRules pointwise_rules(screening::ScreeningModel const &model)
{
  Eigen::Index const       n = model.nodes();
  screening::DecisionRules rules{Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Zero(n, n)};
  auto const               psi1 = screening::virtual_values(model, rules).psi1;
  rules.first                   = (psi1.array() >= 0.0).cast<double>().matrix();
  auto const psi2               = screening::virtual_values(model, rules).psi2;
  rules.second                  = (psi2.array() >= 0.0).cast<double>().matrix();
  return rules;
}

Json first_crossing(Eigen::VectorXd const &grid, Eigen::VectorXd const &q)
{
  for (Eigen::Index i = 0; i < q.size(); ++i)
  {
    if (q(i) >= 0.5)
    {
      return grid(i);
    }
  }
  return "none";
}

}  // namespace

Report cmd_bb(Scenario const &scenario, BbOptions const &options)
{
  require_kind(scenario, {"trade"}, "bb");
  auto model = *scenario.trade;
  if (options.delta)
  {
    try
    {
      model = model.with_discount(*options.delta);
    }
    catch (InvalidArgument const &e)
    {
      throw ParseError(e.what(), "--delta");
    }
  }
  double const tol = scenario.tolerances.series;

  Report report;
  report.command = "bb";
  report.seed    = effective_seed(scenario.seed);
  report.inputs  = Json{{"scenario", scenario.document},
                        {"flags",
                         {{"delta", option(options.delta)},
                          {"grid_step", option(options.grid_step)},
                          {"horizon", options.horizon ? Json(*options.horizon) : Json(nullptr)},
                          {"mc_paths", options.mc_paths ? Json(*options.mc_paths) : Json(nullptr)}}}};

  bilateral::BudgetReport r;
  if (options.horizon)
  {
    if (*options.horizon < 1)
    {
      throw ParseError("must be at least 1", "--horizon");
    }
    r = bilateral::finite_horizon_report(model, *options.horizon, options.delta.value_or(model.discount()));
  }
  else
  {
    r = bilateral::condition_star(model, tol);
  }
  add_budget(report, r);
  report.tables.push_back(payoff_table(model, r));
  report.expect_true("condition (*)", r.holds, "slack " + fmt(r.slack));

  if (options.grid_step)
  {
    if (!(*options.grid_step > 0.0 && *options.grid_step < 1.0))
    {
      throw ParseError("must lie in (0, 1)", "--grid-step");
    }
    auto const t = bilateral::delta_threshold(model, *options.grid_step, tol);
    report.add("delta_star", t.threshold ? Json(*t.threshold) : Json("none"), *options.grid_step);
    report.add("monotone", t.monotone, 0.0);
    Table sweep{"sweep", {"delta", "slack", "holds"}, {}};
    for (auto const &p : t.sweep)
    {
      sweep.rows.push_back({p.discount, p.slack, p.holds});
    }
    report.tables.push_back(std::move(sweep));
  }

  if (options.mc_paths)
  {
    if (*options.mc_paths < 2)
    {
      throw ParseError("needs at least two paths", "--mc-paths");
    }
    if (options.horizon)
    {
      throw ParseError("Monte Carlo runs against the infinite series; drop --horizon", "--mc-paths");
    }
    auto const   mc    = simulate_deficit(model, *options.mc_paths, report.seed);
    double const bound = 3.0 * mc.standard_error + mc.tail + r.tail_bound;
    report.add("mc_deficit", mc.mean, bound);
    report.add("mc_standard_error", mc.standard_error, 0.0);
    report.add("mc_horizon", mc.horizon, mc.tail);
    report.expect_near("Monte Carlo deficit", mc.mean, r.deficit, bound, "3 standard errors plus truncation");
  }
  return report;
}

Report cmd_mech(Scenario const &scenario, MechOptions const &options)
{
  require_kind(scenario, {"trade", "joint"}, "mech");
  if (options.groves_file && options.transfers_file)
  {
    throw ParseError("--groves and --transfers are exclusive", "--groves");
  }
  mdp::JointModel const model = scenario.trade ? bilateral::as_joint_model(*scenario.trade) : *scenario.joint;
  auto const           &space = model.profiles();
  double const          ic_tol = options.ic_tolerance.value_or(scenario.tolerances.ic);
  if (!(ic_tol > 0.0))
  {
    throw ParseError("must be positive", "--ic-tol");
  }

  Report report;
  report.command = "mech";
  report.seed    = effective_seed(scenario.seed);
  std::string mode = options.groves_file ? "groves" : options.transfers_file ? "transfers" : "pivot";
  report.inputs  = Json{{"scenario", scenario.document},
                        {"flags",
                         {{"mode", mode},
                          {"groves", options.groves_file ? Json(*options.groves_file) : Json(nullptr)},
                          {"transfers", options.transfers_file ? Json(*options.transfers_file) : Json(nullptr)},
                          {"ic_tol", ic_tol}}}};

  mdp::SolverOptions const solver;
  auto const               efficient = mdp::solve_efficient(model, solver);
  auto const              &policy    = efficient.policy;
  groves::TransferRule     transfers;
  if (options.groves_file)
  {
    auto const phi = player_tables(load_json(*options.groves_file), "phi", *options.groves_file);
    try
    {
      transfers = groves::groves_transfers(model, policy, phi);
    }
    catch (InvalidArgument const &e)
    {
      throw ParseError(e.what(), *options.groves_file + ":phi");
    }
  }
  else if (options.transfers_file)
  {
    auto flow = player_tables(load_json(*options.transfers_file), "flow", *options.transfers_file);
    try
    {
      transfers = groves::transfers_from_flow(model, policy, std::move(flow));
    }
    catch (InvalidArgument const &e)
    {
      throw ParseError(e.what(), *options.transfers_file + ":flow");
    }
  }
  else
  {
    transfers = groves::pivot_mechanism(model, solver).transfers;
  }

  report.add("welfare_bellman_residual", efficient.residual, solver.tolerance);
  report.add("solver_iterations", efficient.iterations, 0.0);

  Table policy_table{"policy", {"profile", "types", "action", "welfare"}, {}};
  Table transfer_table{"transfers", {"profile", "types"}, {}};
  for (std::size_t i = 0; i < model.players(); ++i)
  {
    transfer_table.columns.push_back("z_" + std::to_string(i));
  }
  for (std::size_t i = 0; i < model.players(); ++i)
  {
    transfer_table.columns.push_back("Z_" + std::to_string(i));
  }
  Table budget_table{"budget", {"profile", "types", "deficit_flow"}, {}};
  for (mdp::ProfileIndex s = 0; s < space.size(); ++s)
  {
    auto const e     = static_cast<Eigen::Index>(s);
    auto const label = profile_label(space, s);
    policy_table.rows.push_back({s, label, policy(s), efficient.welfare[s]});
    std::vector<Json> row{s, label};
    for (auto const &z : transfers.flow)
    {
      row.emplace_back(z(e));
    }
    for (auto const &z : transfers.total)
    {
      row.emplace_back(z(e));
    }
    transfer_table.rows.push_back(std::move(row));
    budget_table.rows.push_back({s, label, groves::budget_flow(transfers, s)});
  }

  auto const ic = groves::verify_periodic_ic(model, policy, transfers, ic_tol);
  std::ostringstream worst;
  worst << "player " << ic.worst_case.player << " at " << profile_label(space, ic.worst_case.truth) << " reporting type "
        << ic.worst_case.report_type;
  report.add("ic_max_gain", ic.max_gain, ic_tol);
  report.add("ic_worst_player", ic.worst_case.player, 0.0);
  report.add("ic_worst_truth", profile_label(space, ic.worst_case.truth), 0.0);
  report.add("ic_worst_report_type", ic.worst_case.report_type, 0.0);
  report.expect_at_most("periodic ex-post IC", ic.max_gain, ic_tol, worst.str());

  Table gains{"ic_gains", {"profile", "types"}, {}};
  for (std::size_t i = 0; i < model.players(); ++i)
  {
    gains.columns.push_back("gain_" + std::to_string(i));
  }
  for (mdp::ProfileIndex s = 0; s < space.size(); ++s)
  {
    std::vector<Json> row{s, profile_label(space, s)};
    for (std::size_t i = 0; i < model.players(); ++i)
    {
      row.emplace_back(ic.per_state_gains(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(s)));
    }
    gains.rows.push_back(std::move(row));
  }

  double const residual = groves::verify_property_a(model, policy, transfers);
  report.add("property_a_residual", residual, scenario.tolerances.property_a);
  report.expect_at_most("Property A", residual, scenario.tolerances.property_a);

  Eigen::VectorXd initial;
  std::string     initial_label;
  if (scenario.initial)
  {
    initial       = *scenario.initial;
    initial_label = "scenario";
  }
  else if (scenario.trade)
  {
    auto const &x = scenario.trade->x().vector();
    auto const &y = scenario.trade->y().vector();
    initial.resize(x.size() * y.size());
    for (Eigen::Index s = 0; s < x.size(); ++s)
    {
      initial.segment(s * y.size(), y.size()) = x(s) * y;
    }
    initial_label = "x (seller) times y (buyer)";
  }
  else
  {
    initial       = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(space.size()), 1.0 / space.size());
    initial_label = "uniform";
  }
  double const deficit_tol = solver.tolerance / (1.0 - model.discount());
  report.add("expected_discounted_deficit", groves::expected_discounted_deficit(model, policy, transfers, initial),
             deficit_tol);
  report.add("initial_distribution", initial_label, 0.0);

  report.tables.push_back(std::move(policy_table));
  report.tables.push_back(std::move(transfer_table));
  report.tables.push_back(std::move(gains));
  report.tables.push_back(std::move(budget_table));
  return report;
}

Report cmd_screen(Scenario const &scenario, ScreenOptions const &options)
{
  require_kind(scenario, {"screening"}, "screen");
  if (options.optimal && options.rules_file)
  {
    throw ParseError("--optimal and --check-rules are exclusive", "--optimal");
  }
  if (options.grid && *options.grid < 2)
  {
    throw ParseError("needs at least two intervals", "--grid");
  }
  auto const model = [&] {
    try
    {
      return scenario.screening->build(options.grid);
    }
    catch (ParseError const &)
    {
      throw;
    }
    catch (InvalidArgument const &e)
    {
      throw ParseError(e.what(), "--grid");
    }
  }();

  Report report;
  report.command = "screen";
  report.seed    = effective_seed(scenario.seed);
  report.inputs  = Json{{"scenario", scenario.document},
                        {"flags",
                         {{"mode", options.rules_file ? "check-rules" : "optimal"},
                          {"rules", options.rules_file ? Json(*options.rules_file) : Json(nullptr)},
                          {"grid", options.grid ? Json(*options.grid) : Json(nullptr)}}}};

  double const n  = static_cast<double>(model.intervals());
  auto const  &th = model.grid();

  // Regularity and, in optimal mode, the rules themselves.
  std::optional<screening::DecisionRules> optimal;
  std::string                             irregular;
  try
  {
    optimal = screening::optimal_rules(model);
  }
  catch (NotRegular const &e)
  {
    std::ostringstream where;
    where << e.what() << " at theta1 = " << fmt(e.theta1());
    if (!std::isnan(e.theta2()))
    {
      where << ", theta2 = " << fmt(e.theta2());
    }
    irregular = where.str();
  }
  report.add("regular", irregular.empty(), 1e-9);

  screening::DecisionRules rules;
  if (options.rules_file)
  {
    rules = parse_rules(load_json(*options.rules_file), model, *options.rules_file);
  }
  else
  {
    report.expect_true("regularity", irregular.empty(), irregular);
    rules = optimal ? *optimal : pointwise_rules(model);
  }

  auto const vv = screening::virtual_values(model, rules);
  Table      psi1{"psi1", {"theta1", "psi1", "q1"}, {}};
  for (Eigen::Index i = 0; i < th.size(); ++i)
  {
    psi1.rows.push_back({th(i), vv.psi1(i), rules.first(i)});
  }
  // psi2 on a coarse sub-grid of about 21 x 21 nodes.
  Eigen::Index const stride = std::max<Eigen::Index>(1, (th.size() - 1) / 20);
  Table              psi2{"psi2", {"theta1"}, {}};
  for (Eigen::Index j = 0; j < th.size(); j += stride)
  {
    psi2.columns.push_back("theta2=" + label(th(j)));
  }
  for (Eigen::Index i = 0; i < th.size(); i += stride)
  {
    std::vector<Json> row{th(i)};
    for (Eigen::Index j = 0; j < th.size(); j += stride)
    {
      row.emplace_back(vv.psi2(i, j));
    }
    psi2.rows.push_back(std::move(row));
  }

  Json   t2_low  = "none";
  Json   t2_high = "none";
  double lo = std::numeric_limits<double>::infinity(), hi = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < th.size(); ++i)
  {
    Json const t = first_crossing(th, rules.second.row(i).transpose());
    if (t.is_number())
    {
      lo = std::min(lo, t.get<double>());
      hi = std::max(hi, t.get<double>());
    }
  }
  if (lo <= hi)
  {
    t2_low  = lo;
    t2_high = hi;
  }
  double const h = model.step();
  report.add("threshold1", first_crossing(th, rules.first), h);
  report.add("threshold2_min", t2_low, h);
  report.add("threshold2_max", t2_high, h);

  double const revenue = screening::seller_revenue(model, rules);
  auto const   identity = screening::payment_identity(model, rules);
  double const mono     = screening::check_monotonicity2(model, rules);
  double const ic1      = screening::check_ic1_integral(model, rules);
  double const pi_tol   = 50.0 / (n * n);
  double const ic1_tol  = 20.0 / (n * n);
  report.add("revenue", revenue, pi_tol);
  report.add("payment_direct", identity.direct, pi_tol);
  report.add("payment_virtual", identity.virtual_form, pi_tol);
  report.add("payment_identity_discrepancy", identity.discrepancy, pi_tol);
  report.add("monotonicity2_violation", mono, 0.0);
  report.add("ic1_integral_residual", ic1, ic1_tol);
  report.add("transfer_representative", "U_2(lower) = 0 after every report; U_1(lower) = 0", 0.0);

  report.expect_at_most("monotonicity of q2 in theta2", mono, 0.0);
  report.expect_at_most("integral IC_1", ic1, ic1_tol);
  report.expect_at_most("payment identity", identity.discrepancy, pi_tol);

  report.tables.push_back(std::move(psi1));
  report.tables.push_back(std::move(psi2));
  return report;
}

}  // namespace mechdyn::cli
