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

#include <doctest.h>

#include <cstdlib>
#include <regex>
#include <sstream>

using namespace mechdyn;
using namespace mechdyn::cli;

namespace {

std::string const kDir = MECHDYN_SCENARIO_DIR;

struct Outcome
{
  int         code;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> const &args)
{
  std::ostringstream out, err;
  int const          code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string without_timestamp(std::string text)
{
  return std::regex_replace(text, std::regex(R"("timestamp": "[^"]*")"), "\"timestamp\": \"\"");
}

ParseError parse_error(std::string const &text)
{
  try
  {
    parse_scenario(text);
  }
  catch (ParseError const &e)
  {
    return e;
  }
  FAIL("expected ParseError");
  return ParseError("unreachable");
}

std::string const kTrade = R"({
  "schema": 1,
  "kind": "trade",
  "model": {
    "values": [0.0, 1.0],
    "seller": [[0.5, 0.5], [0.5, 0.5]],
    "buyer": [[0.5, 0.5], [0.5, 0.5]],
    "x": [0.5, 0.5],
    "y": [0.5, 0.5],
    "discount": 0.9
  }
})";

std::string replace(std::string text, std::string const &from, std::string const &to)
{
  auto const at = text.find(from);
  REQUIRE(at != std::string::npos);
  return text.replace(at, from.size(), to);
}

}  // namespace

TEST_CASE("scenario parsing")
{
  auto const scenario = parse_scenario(kTrade);
  CHECK(scenario.kind == "trade");
  REQUIRE(scenario.trade);
  CHECK(scenario.trade->discount() == 0.9);
  CHECK(scenario.seed == 1);
}

TEST_CASE("scenario parse errors carry the field or line")
{
  auto const malformed = parse_error("{\n  \"schema\": 1,\n  \"kind\": \"trade\",,\n}");
  REQUIRE(malformed.line());
  CHECK(*malformed.line() == 3);

  auto const row = parse_error(replace(kTrade, "\"seller\": [[0.5, 0.5], [0.5, 0.5]]", "\"seller\": [[0.5, 0.5], [0.7, 0.5]]"));
  CHECK(row.field() == "model.seller");
  CHECK(std::string(row.what()).find("row 1") != std::string::npos);

  CHECK(parse_error(replace(kTrade, "\"discount\": 0.9", "\"discount\": 0.9, \"extra\": 1")).field() == "model.extra");
  CHECK(parse_error(replace(kTrade, "\"schema\": 1", "\"schema\": 2")).field() == "schema");
  CHECK(parse_error(replace(kTrade, "\"kind\": \"trade\"", "\"kind\": \"auction\"")).field() == "kind");
  CHECK(parse_error(replace(kTrade, "\"values\": [0.0, 1.0]", "\"values\": [1.0, 0.0]")).field() == "model.values");
  CHECK(parse_error(replace(kTrade, "\"x\": [0.5, 0.5],", "")).field() == "model.x");
  CHECK(parse_error(replace(kTrade, "\"discount\": 0.9", "\"discount\": \"high\"")).field() == "model.discount");
}

TEST_CASE("number formatting round-trips")
{
  CHECK(format_number(0.0) == "0");
  CHECK(format_number(-0.0) == "0");
  CHECK(format_number(1.0 / 3.0) == "0.33333333333333331");
  double const v = 0.1 + 0.2;
  CHECK(std::stod(format_number(v)) == v);
  CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");
}

TEST_CASE("exit codes")
{
  CHECK(invoke({"demo", "uniform-two-period"}).code == 0);
  auto const unknown = invoke({"demo", "no-such-demo"});
  CHECK(unknown.code == 2);
  CHECK(unknown.err.find("uniform-two-period") != std::string::npos);
  CHECK(invoke({"bb", kDir + "/bad_row.json"}).code == 2);
  CHECK(invoke({"bb", kDir + "/missing.json"}).code == 2);
  CHECK(invoke({"frobnicate"}).code == 2);
  CHECK(invoke({"--help"}).code == 0);
  CHECK(invoke({"--version"}).out.find(kToolVersion) != std::string::npos);
  CHECK(invoke({"mech", kDir + "/two_state_trade.json", "--pivot", "--groves", "x.json"}).code == 2);

  auto const perturbed = invoke({"mech", kDir + "/two_state_trade.json", "--transfers", kDir + "/perturbed_flow.json"});
  CHECK(perturbed.code == 1);
  CHECK(perturbed.out.find("FAIL periodic ex-post IC") != std::string::npos);
  CHECK(perturbed.out.find("player 0 at (1,1) reporting type 0") != std::string::npos);
}

TEST_CASE("reports are deterministic apart from the timestamp")
{
  std::vector<std::string> const args{"--format", "json", "bb", kDir + "/two_state_trade.json", "--mc-paths", "2000"};
  auto const first  = invoke(args);
  auto const second = invoke(args);
  CHECK(first.code == 0);
  CHECK(without_timestamp(first.out) == without_timestamp(second.out));

  auto const doc = Json::parse(first.out);
  CHECK(doc["schema"] == 1);
  CHECK(doc["provenance"]["seed"] == 7);
  CHECK(doc["results"].contains("deficit"));
  for (auto const &[name, result] : doc["results"].items())
  {
    CHECK(result.contains("tolerance"));
  }
}

TEST_CASE("seed override from the environment")
{
  CHECK(effective_seed(5) == 5);
  ::setenv("MECHDYN_SEED", "42", 1);
  CHECK(effective_seed(5) == 42);
  auto const out = invoke({"--format", "json", "bb", kDir + "/two_state_trade.json"});
  CHECK(Json::parse(out.out)["provenance"]["seed"] == 42);
  ::unsetenv("MECHDYN_SEED");
}

TEST_CASE("bb sweep reports the threshold")
{
  auto const out = invoke({"--format", "csv", "bb", kDir + "/two_state_trade.json", "--grid-step", "0.01"});
  CHECK(out.code == 0);
  CHECK(out.out.find("delta_star") != std::string::npos);
  CHECK(out.out.find("# table sweep") != std::string::npos);
  CHECK(out.out.find("# provenance") != std::string::npos);
}

TEST_CASE("mech on joint and single-player scenarios")
{
  CHECK(invoke({"mech", kDir + "/joint_two_player.json"}).code == 0);
  auto const single =
    invoke({"mech", kDir + "/single_player.json", "--groves", kDir + "/single_player_phi.json"});
  CHECK(single.code == 0);
  CHECK(single.out.find("PASS Property A") != std::string::npos);
}

TEST_CASE("screen reports rule violations")
{
  auto const out = invoke({"screen", kDir + "/screening_uniform.json", "--check-rules",
                           kDir + "/decreasing_rules.json", "--grid", "10"});
  CHECK(out.code == 1);
  CHECK(out.out.find("FAIL monotonicity of q2 in theta2") != std::string::npos);
  CHECK(invoke({"screen", kDir + "/screening_uniform.json", "--check-rules", kDir + "/decreasing_rules.json"}).code ==
        2);
  CHECK(invoke({"screen", kDir + "/screening_fgm.json", "--optimal"}).code == 0);
}

TEST_CASE("demo --all emits one report per demo")
{
  auto const out = invoke({"--format", "json", "demo", "--all"});
  CHECK(out.code == 0);
  auto const doc = Json::parse(out.out);
  REQUIRE(doc.is_array());
  CHECK(doc.size() == demo_names().size());
  for (auto const &report : doc)
  {
    CHECK(report["passed"] == true);
  }
}
