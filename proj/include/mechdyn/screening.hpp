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

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

// Two-period screening of a single player on a uniform type grid. Integrals use the
// trapezoid rule on the grid nodes; derivatives in theta_1 use central differences
// (second-order one-sided at the ends).
namespace mechdyn::screening {

/// Below this a density is treated as zero where it appears as a divisor.
inline constexpr double kDensityFloor = 1e-12;
/// Tolerance for densities integrating to one.
inline constexpr double kMassTolerance = 1e-6;

/// One-period valuation v(theta, a) with its theta-derivative.
struct Valuation
{
  std::function<double(double, double)> value;
  std::function<double(double, double)> slope;
  /// v = theta * q with q in [0, 1].
  bool trading{false};

  static Valuation trade();
};

/// Decision rules on the grid. first(k) = a_1(theta_k); second(k, j) = a_2 after a
/// first-period report theta_k and a second-period report theta_j. In the trading
/// case these are trade probabilities.
struct DecisionRules
{
  Eigen::VectorXd first;
  Eigen::MatrixXd second;
};

class ScreeningModel
{
public:
  /// `f2[m](i, j)` is f_2(theta_j | theta_i, action_nodes[m]); f_2 is linear in the
  /// action between nodes. A single node makes f_2 action-independent.
  ScreeningModel(double lower, double upper, Eigen::VectorXd f1, std::vector<Eigen::MatrixXd> f2,
                 std::vector<double> action_nodes, double discount, Valuation valuation = Valuation::trade());

  /// Tabulates densities from callables; f2(theta1, theta2, a).
  static ScreeningModel from_functions(double lower, double upper, std::size_t intervals,
                                       std::function<double(double)> const                 &f1,
                                       std::function<double(double, double, double)> const &f2,
                                       std::vector<double> action_nodes, double discount,
                                       Valuation valuation = Valuation::trade());

  /// Grid intervals N; there are N + 1 nodes.
  std::size_t            intervals() const { return static_cast<std::size_t>(grid_.size() - 1); }
  Eigen::Index           nodes() const { return grid_.size(); }
  double                 lower() const { return grid_(0); }
  double                 upper() const { return grid_(grid_.size() - 1); }
  double                 step() const { return step_; }
  double                 discount() const { return discount_; }
  Eigen::VectorXd const &grid() const { return grid_; }
  /// Trapezoid weights of the grid.
  Eigen::VectorXd const     &weights() const { return weights_; }
  Eigen::VectorXd const     &f1() const { return f1_; }
  /// F_1 at the nodes by cumulative trapezoid.
  Eigen::VectorXd const     &cdf1() const { return cdf1_; }
  std::vector<double> const &action_nodes() const { return action_nodes_; }
  Valuation const           &valuation() const { return valuation_; }

  /// Tables at an arbitrary action, interpolated between nodes.
  Eigen::MatrixXd density2(double action) const;
  Eigen::MatrixXd cdf2(double action) const;
  /// dF_2(theta_j | theta_i, a) / d theta_1 by finite differences in i.
  Eigen::MatrixXd cdf2_slope(double action) const;

  /// Node tables, one per action node.
  Eigen::MatrixXd const &density2_node(std::size_t m) const { return f2_[m]; }
  Eigen::MatrixXd const &cdf2_node(std::size_t m) const { return cdf2_[m]; }
  Eigen::MatrixXd const &cdf2_slope_node(std::size_t m) const { return slope2_[m]; }

  /// Interpolation weights (node, weight) of an action; at most two entries.
  std::vector<std::pair<std::size_t, double>> action_weights(double action) const;

  ScreeningModel with_discount(double discount) const;

private:
  Eigen::VectorXd              grid_;
  double                       step_{0.0};
  Eigen::VectorXd              weights_;
  Eigen::VectorXd              f1_;
  Eigen::VectorXd              cdf1_;
  std::vector<Eigen::MatrixXd> f2_;
  std::vector<Eigen::MatrixXd> cdf2_;
  std::vector<Eigen::MatrixXd> slope2_;
  std::vector<double>          action_nodes_;
  double                       discount_{0.0};
  Valuation                    valuation_;
};

/// Cumulative trapezoid integral of samples with spacing h.
Eigen::VectorXd cumulative_trapezoid(Eigen::VectorXd const &f, double h);

/// Largest drop of a_2 along its last argument (0 when weakly increasing).
double check_monotonicity2(ScreeningModel const &model, DecisionRules const &rules);

/// U_2(theta_2; theta_hat_1) along the grid after report index `report`.
Eigen::VectorXd u2_envelope(ScreeningModel const &model, DecisionRules const &rules, std::size_t report,
                            double u2_base = 0.0);

/// -(dF_2/d theta_1) / f_2 at a real point, by bilinear interpolation of the tables.
double impulse_response(ScreeningModel const &model, double theta1, double theta2, double action);

struct VirtualValues
{
  Eigen::VectorXd psi1;
  /// psi2(i, j) = psi_2(theta_i, theta_j), conditioning F_2 on a_1(theta_i).
  Eigen::MatrixXd psi2;
};

VirtualValues virtual_values(ScreeningModel const &model, DecisionRules const &rules);

/// int psi_1 q_1 f_1 + delta int int psi_2 q_2 f_2 f_1 - U_1(lower). Trading case only.
double seller_revenue(ScreeningModel const &model, DecisionRules const &rules, double u1_base = 0.0);

/// U_1 along the grid from its envelope.
Eigen::VectorXd u1_envelope(ScreeningModel const &model, DecisionRules const &rules, double u1_base = 0.0);

struct PaymentIdentity
{
  /// Expected payment as total value minus expected U_1.
  double direct{0.0};
  /// Expected payment in virtual-valuation form.
  double virtual_form{0.0};
  double discrepancy{0.0};
};

PaymentIdentity payment_identity(ScreeningModel const &model, DecisionRules const &rules, double u1_base = 0.0);

/// |direct - virtual_form|.
double payment_identity_check(ScreeningModel const &model, DecisionRules const &rules, double u1_base = 0.0);

/// Max over ordered grid pairs of RHS - LHS in the integral IC_1 condition.
double check_ic1_integral(ScreeningModel const &model, DecisionRules const &rules);

/// Threshold rules q_1 = 1{psi_1 >= 0}, q_2 = 1{psi_2 >= 0}. Trading case only.
/// Throws NotRegular when psi_1 or psi_2 fails to be nondecreasing.
DecisionRules optimal_rules(ScreeningModel const &model);

/// One transfer representative consistent with the envelopes: U_2(lower; .) = 0
/// after every first-period report and U_1 pinned by its envelope and base.
struct Transfers
{
  Eigen::VectorXd first;
  /// second(k, j): payment in period 2 after reports theta_k, theta_j.
  Eigen::MatrixXd second;
  Eigen::VectorXd u1;
};

Transfers reconstruct_transfers(ScreeningModel const &model, DecisionRules const &rules, double u1_base = 0.0);

/// gains(k, l) = U_1(theta_l reported, theta_k true) - U_1(theta_k), with truthful
/// reporting in period 2.
Eigen::MatrixXd ic1_direct_gains(ScreeningModel const &model, DecisionRules const &rules, Transfers const &transfers);

/// Largest period-2 misreport gain over every first report and grid pair.
double ic2_max_gain(ScreeningModel const &model, DecisionRules const &rules, Transfers const &transfers);

/// Test and demo families on [0, 1].
namespace fixtures {

/// Uniform F_1, f_2 independent of theta_1 and of the action.
ScreeningModel uniform(std::size_t intervals, double discount);
/// Uniform F_1, f_2 = 1 + gamma (2 theta_1 - 1)(2 theta_2 - 1), |gamma| <= 1.
ScreeningModel fgm(std::size_t intervals, double gamma, double discount);
/// f_2 = (1 - a) * 1 + a * FGM(gamma), action nodes {0, 1}.
ScreeningModel mixture(std::size_t intervals, double gamma, double discount);
/// Two-humped F_1 with a deep valley in the middle; f_2 uniform.
ScreeningModel bimodal(std::size_t intervals, double discount);

}  // namespace fixtures

}  // namespace mechdyn::screening
