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

#include "mechdyn/bilateral.hpp"
#include "mechdyn/error.hpp"
#include "mechdyn/mdp.hpp"
#include "mechdyn/screening.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mechdyn::cli {

using Json = nlohmann::ordered_json;

inline constexpr char const *kToolVersion = "0.1.0";
inline constexpr int         kSchemaVersion = 1;

/// Scenario or auxiliary file could not be read or validated. `field` is a dotted
/// path ("model.seller[1]"); `line` is set for JSON syntax errors.
class ParseError : public InvalidArgument
{
public:
  ParseError(std::string const &message, std::string field = {}, std::optional<std::size_t> line = std::nullopt);

  std::string const               &field() const { return field_; }
  std::optional<std::size_t> const &line() const { return line_; }

private:
  std::string                field_;
  std::optional<std::size_t> line_;
};

class UnknownDemo : public InvalidArgument
{
public:
  using InvalidArgument::InvalidArgument;
};

struct Tolerances
{
  double series{bilateral::kSeriesTolerance};
  double ic{1e-9};
  double property_a{1e-9};
};

/// Screening scenarios name a fixture family or carry explicit tables.
struct ScreeningSpec
{
  std::string family{"uniform"};
  std::size_t grid{400};
  double      discount{1.0};
  double      gamma{0.5};
  /// Only for family "table".
  double                       lower{0.0};
  double                       upper{1.0};
  Eigen::VectorXd              f1;
  std::vector<Eigen::MatrixXd> f2;
  std::vector<double>          action_nodes;

  screening::ScreeningModel build(std::optional<std::size_t> grid_override = std::nullopt) const;
};

struct Scenario
{
  std::string   kind;
  std::uint64_t seed{1};
  Tolerances    tolerances;
  std::optional<bilateral::TradeModel> trade;
  std::optional<mdp::JointModel>       joint;
  /// Initial distribution over joint profiles (joint kind); uniform when absent.
  std::optional<Eigen::VectorXd> initial;
  std::optional<ScreeningSpec>   screening;
  /// The parsed document, echoed into reports.
  Json document;
};

Scenario parse_scenario(std::string const &text);
Scenario load_scenario(std::string const &path);
/// JSON text of a file, with ParseError on syntax errors (line reported).
Json load_json(std::string const &path);

/// One named scalar with the tolerance or tail bound it was computed under.
struct Result
{
  std::string name;
  Json        value;
  double      tolerance{0.0};
};

struct Check
{
  std::string name;
  bool        passed{false};
  double      value{0.0};
  double      expected{0.0};
  double      tolerance{0.0};
  std::string detail;
};

struct Table
{
  std::string              name;
  std::vector<std::string> columns;
  std::vector<std::vector<Json>> rows;
};

struct Report
{
  std::string         command;
  Json                inputs = Json::object();
  std::vector<Result> results;
  std::vector<Table>  tables;
  std::vector<Check>  checks;
  std::uint64_t       seed{0};
  std::string         timestamp;

  void add(std::string name, Json value, double tolerance) { results.push_back({std::move(name), std::move(value), tolerance}); }
  /// Passes when |value - expected| <= tolerance.
  Check &expect_near(std::string name, double value, double expected, double tolerance, std::string detail = {});
  /// Passes when value <= bound.
  Check &expect_at_most(std::string name, double value, double bound, std::string detail = {});
  Check &expect_true(std::string name, bool condition, std::string detail = {});

  bool passed() const;
  Json to_json() const;
};

enum class Format
{
  text,
  json,
  csv,
};

void write_report(Report const &report, Format format, std::ostream &out);
/// `--all` demos: a JSON array, or the individual reports one after another.
void write_reports(std::vector<Report> const &reports, Format format, std::ostream &out);

/// Formats a double with 17 significant digits.
std::string format_number(double value);

std::vector<std::string> demo_names();

struct DemoOptions
{
  std::optional<double>      alpha;
  std::optional<double>      delta;
  std::optional<std::size_t> grid;
};

Report cmd_demo(std::string const &name, DemoOptions const &options = {});

struct BbOptions
{
  std::optional<double>             delta;
  std::optional<double>             grid_step;
  std::optional<unsigned long long> horizon;
  std::optional<std::size_t>        mc_paths;
};

Report cmd_bb(Scenario const &scenario, BbOptions const &options = {});

struct MechOptions
{
  /// At most one of these; pivot when both are empty.
  std::optional<std::string> groves_file;
  std::optional<std::string> transfers_file;
  std::optional<double>      ic_tolerance;
};

Report cmd_mech(Scenario const &scenario, MechOptions const &options = {});

struct ScreenOptions
{
  bool                       optimal{false};
  std::optional<std::string> rules_file;
  std::optional<std::size_t> grid;
};

Report cmd_screen(Scenario const &scenario, ScreenOptions const &options = {});

/// Seed after the MECHDYN_SEED override.
std::uint64_t effective_seed(std::uint64_t scenario_seed);

/// Entry point: 0 when every check passes, 1 when a check fails, 2 on input errors.
int run(std::vector<std::string> const &args, std::ostream &out, std::ostream &err);

}  // namespace mechdyn::cli
