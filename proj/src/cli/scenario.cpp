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

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace mechdyn::cli {

namespace {

std::string describe(std::string const &message, std::string const &field, std::optional<std::size_t> line)
{
  std::string out;
  if (line)
  {
    out += "line " + std::to_string(*line) + ": ";
  }
  if (!field.empty())
  {
    out += field + ": ";
  }
  return out + message;
}

std::size_t line_of(std::string const &text, std::size_t byte)
{
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

Json parse_text(std::string const &text)
{
  try
  {
    return Json::parse(text);
  }
  catch (nlohmann::json::parse_error const &e)
  {
    // byte is one past the offending character
    std::size_t const byte = e.byte > 0 ? e.byte - 1 : 0;
    throw ParseError("malformed JSON", {}, line_of(text, byte));
  }
}

std::string read_file(std::string const &path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
  {
    throw ParseError("cannot open file", path);
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

Json const &require(Json const &object, std::string const &key, std::string const &path)
{
  auto it = object.find(key);
  if (it == object.end())
  {
    throw ParseError("missing required field", path.empty() ? key : path + "." + key);
  }
  return *it;
}

std::string join(std::string const &path, std::string const &key)
{
  return path.empty() ? key : path + "." + key;
}

std::string index(std::string const &path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

void only_keys(Json const &object, std::set<std::string> const &allowed, std::string const &path)
{
  if (!object.is_object())
  {
    throw ParseError("expected an object", path);
  }
  for (auto const &item : object.items())
  {
    if (!allowed.count(item.key()))
    {
      throw ParseError("unknown field", join(path, item.key()));
    }
  }
}

double number(Json const &value, std::string const &path)
{
  if (!value.is_number())
  {
    throw ParseError("expected a number", path);
  }
  return value.get<double>();
}

std::size_t count(Json const &value, std::string const &path)
{
  if (!value.is_number_unsigned() && !(value.is_number_integer() && value.get<long long>() >= 0))
  {
    throw ParseError("expected a nonnegative integer", path);
  }
  return value.get<std::size_t>();
}

std::vector<double> numbers(Json const &value, std::string const &path)
{
  if (!value.is_array())
  {
    throw ParseError("expected an array of numbers", path);
  }
  std::vector<double> out;
  out.reserve(value.size());
  for (std::size_t i = 0; i < value.size(); ++i)
  {
    out.push_back(number(value[i], index(path, i)));
  }
  return out;
}

std::vector<std::vector<double>> rows(Json const &value, std::string const &path)
{
  if (!value.is_array())
  {
    throw ParseError("expected an array of rows", path);
  }
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < value.size(); ++i)
  {
    out.push_back(numbers(value[i], index(path, i)));
    if (out.back().size() != out.front().size())
    {
      throw ParseError("rows have different lengths", index(path, i));
    }
  }
  return out;
}

Eigen::MatrixXd matrix(Json const &value, std::string const &path)
{
  auto const      r = rows(value, path);
  Eigen::Index    cols = r.empty() ? 0 : static_cast<Eigen::Index>(r.front().size());
  Eigen::MatrixXd m(static_cast<Eigen::Index>(r.size()), cols);
  for (std::size_t i = 0; i < r.size(); ++i)
  {
    for (std::size_t j = 0; j < r[i].size(); ++j)
    {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r[i][j];
    }
  }
  return m;
}

Eigen::VectorXd vector(Json const &value, std::string const &path)
{
  auto const v = numbers(value, path);
  return Eigen::Map<Eigen::VectorXd const>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Library validation errors are re-raised with the field they came from.
template <typename F>
auto validated(std::string const &path, F &&make)
{
  try
  {
    return make();
  }
  catch (ParseError const &)
  {
    throw;
  }
  catch (InvalidArgument const &e)
  {
    throw ParseError(e.what(), path);
  }
}

markov::StochasticMatrix stochastic(Json const &value, std::string const &path)
{
  auto const r = rows(value, path);
  return validated(path, [&] { return markov::StochasticMatrix(r); });
}

markov::DistributionVector distribution(Json const &value, std::string const &path)
{
  auto const v = numbers(value, path);
  return validated(path, [&] { return markov::DistributionVector(v); });
}

bilateral::TradeModel parse_trade(Json const &model)
{
  std::string const path = "model";
  only_keys(model, {"values", "seller", "buyer", "x", "y", "discount"}, path);
  auto values = numbers(require(model, "values", path), "model.values");
  validated("model.values", [&] { return bilateral::gap_matrix(values); });
  auto seller = stochastic(require(model, "seller", path), "model.seller");
  auto buyer  = stochastic(require(model, "buyer", path), "model.buyer");
  auto x      = distribution(require(model, "x", path), "model.x");
  auto y      = distribution(require(model, "y", path), "model.y");
  double const discount = number(require(model, "discount", path), "model.discount");
  return validated(path, [&] { return bilateral::TradeModel(values, seller, buyer, x, y, discount); });
}

mdp::JointModel parse_joint(Json const &model)
{
  std::string const path = "model";
  only_keys(model, {"actions", "discount", "bound", "players"}, path);
  std::size_t const actions  = count(require(model, "actions", path), "model.actions");
  double const      discount = number(require(model, "discount", path), "model.discount");
  std::optional<double> bound;
  if (model.contains("bound"))
  {
    bound = number(model["bound"], "model.bound");
  }
  Json const &players = require(model, "players", path);
  if (!players.is_array() || players.empty())
  {
    throw ParseError("expected a nonempty array of players", "model.players");
  }
  std::vector<mdp::PlayerSpec> specs;
  for (std::size_t i = 0; i < players.size(); ++i)
  {
    std::string const where = index("model.players", i);
    only_keys(players[i], {"valuation", "transitions", "essential"}, where);
    mdp::PlayerSpec spec;
    spec.valuation = rows(require(players[i], "valuation", where), join(where, "valuation"));
    Json const &kernels = require(players[i], "transitions", where);
    if (!kernels.is_array())
    {
      throw ParseError("expected one matrix per action", join(where, "transitions"));
    }
    for (std::size_t a = 0; a < kernels.size(); ++a)
    {
      spec.transitions.push_back(stochastic(kernels[a], index(join(where, "transitions"), a)));
    }
    if (players[i].contains("essential"))
    {
      Json const &essential = players[i]["essential"];
      if (!essential.is_array())
      {
        throw ParseError("expected an array of action indices", join(where, "essential"));
      }
      for (std::size_t a = 0; a < essential.size(); ++a)
      {
        spec.essential.push_back(count(essential[a], index(join(where, "essential"), a)));
      }
    }
    specs.push_back(std::move(spec));
  }
  return validated(path, [&] { return mdp::JointModel(std::move(specs), actions, discount, bound); });
}

ScreeningSpec parse_screening(Json const &model)
{
  std::string const path = "model";
  only_keys(model, {"family", "grid", "discount", "gamma", "lower", "upper", "f1", "f2", "action_nodes"}, path);
  ScreeningSpec spec;
  if (model.contains("family"))
  {
    if (!model["family"].is_string())
    {
      throw ParseError("expected a string", "model.family");
    }
    spec.family = model["family"].get<std::string>();
  }
  static std::set<std::string> const families{"uniform", "fgm", "mixture", "bimodal", "table"};
  if (!families.count(spec.family))
  {
    throw ParseError("unknown family '" + spec.family + "'", "model.family");
  }
  if (model.contains("grid"))
  {
    spec.grid = count(model["grid"], "model.grid");
  }
  spec.discount = number(require(model, "discount", path), "model.discount");
  if (model.contains("gamma"))
  {
    spec.gamma = number(model["gamma"], "model.gamma");
  }
  if (spec.family == "table")
  {
    spec.lower = number(require(model, "lower", path), "model.lower");
    spec.upper = number(require(model, "upper", path), "model.upper");
    spec.f1    = vector(require(model, "f1", path), "model.f1");
    Json const &f2 = require(model, "f2", path);
    if (!f2.is_array())
    {
      throw ParseError("expected one matrix per action node", "model.f2");
    }
    for (std::size_t m = 0; m < f2.size(); ++m)
    {
      spec.f2.push_back(matrix(f2[m], index("model.f2", m)));
    }
    spec.action_nodes = model.contains("action_nodes") ? numbers(model["action_nodes"], "model.action_nodes")
                                                       : std::vector<double>{0.0};
    spec.grid = static_cast<std::size_t>(std::max<Eigen::Index>(spec.f1.size(), 1) - 1);
  }
  else
  {
    for (char const *key : {"lower", "upper", "f1", "f2", "action_nodes"})
    {
      if (model.contains(key))
      {
        throw ParseError("only allowed with family 'table'", join(path, key));
      }
    }
  }
  // Validate the model now so errors surface at load time.
  validated(path, [&] { return spec.build(); });
  return spec;
}

}  // namespace

ParseError::ParseError(std::string const &message, std::string field, std::optional<std::size_t> line)
  : InvalidArgument(describe(message, field, line))
  , field_(std::move(field))
  , line_(line)
{}

screening::ScreeningModel ScreeningSpec::build(std::optional<std::size_t> grid_override) const
{
  std::size_t const n = grid_override.value_or(grid);
  if (family == "uniform")
  {
    return screening::fixtures::uniform(n, discount);
  }
  if (family == "fgm")
  {
    return screening::fixtures::fgm(n, gamma, discount);
  }
  if (family == "mixture")
  {
    return screening::fixtures::mixture(n, gamma, discount);
  }
  if (family == "bimodal")
  {
    return screening::fixtures::bimodal(n, discount);
  }
  if (grid_override && *grid_override != grid)
  {
    throw InvalidArgument("a tabulated screening model has a fixed grid");
  }
  return screening::ScreeningModel(lower, upper, f1, f2, action_nodes, discount);
}

Json load_json(std::string const &path)
{
  try
  {
    return parse_text(read_file(path));
  }
  catch (ParseError const &e)
  {
    throw ParseError(e.what(), path);
  }
}

Scenario parse_scenario(std::string const &text)
{
  Json doc = parse_text(text);
  only_keys(doc, {"schema", "kind", "seed", "tolerances", "model", "initial", "description"}, "");
  if (count(require(doc, "schema", ""), "schema") != static_cast<std::size_t>(kSchemaVersion))
  {
    throw ParseError("unsupported schema version", "schema");
  }
  Scenario s;
  Json const &kind = require(doc, "kind", "");
  if (!kind.is_string())
  {
    throw ParseError("expected a string", "kind");
  }
  s.kind = kind.get<std::string>();
  if (doc.contains("seed"))
  {
    if (!doc["seed"].is_number_unsigned())
    {
      throw ParseError("expected a nonnegative integer", "seed");
    }
    s.seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("tolerances"))
  {
    Json const &t = doc["tolerances"];
    only_keys(t, {"series", "ic", "property_a"}, "tolerances");
    if (t.contains("series"))
    {
      s.tolerances.series = number(t["series"], "tolerances.series");
    }
    if (t.contains("ic"))
    {
      s.tolerances.ic = number(t["ic"], "tolerances.ic");
    }
    if (t.contains("property_a"))
    {
      s.tolerances.property_a = number(t["property_a"], "tolerances.property_a");
    }
    for (auto const &item : t.items())
    {
      if (item.value().get<double>() <= 0.0)
      {
        throw ParseError("tolerance must be positive", "tolerances." + item.key());
      }
    }
  }
  Json const &model = require(doc, "model", "");
  if (s.kind == "trade")
  {
    s.trade = parse_trade(model);
  }
  else if (s.kind == "joint")
  {
    s.joint = parse_joint(model);
  }
  else if (s.kind == "screening")
  {
    s.screening = parse_screening(model);
  }
  else
  {
    throw ParseError("unknown kind '" + s.kind + "' (expected trade, joint or screening)", "kind");
  }
  if (doc.contains("initial"))
  {
    if (s.kind != "joint")
    {
      throw ParseError("only allowed for kind 'joint'", "initial");
    }
    auto const mass = distribution(doc["initial"], "initial");
    if (mass.size() != s.joint->profiles().size())
    {
      throw ParseError("needs one entry per joint profile", "initial");
    }
    s.initial = mass.vector();
  }
  s.document = std::move(doc);
  return s;
}

Scenario load_scenario(std::string const &path)
{
  std::string const text = read_file(path);
  return parse_scenario(text);
}

std::uint64_t effective_seed(std::uint64_t scenario_seed)
{
  char const *env = std::getenv("MECHDYN_SEED");
  if (env == nullptr || *env == '\0')
  {
    return scenario_seed;
  }
  char *end = nullptr;
  unsigned long long const value = std::strtoull(env, &end, 10);
  if (*end != '\0' || *env == '-')
  {
    throw ParseError("MECHDYN_SEED is not a nonnegative integer", "MECHDYN_SEED");
  }
  return value;
}

}  // namespace mechdyn::cli
