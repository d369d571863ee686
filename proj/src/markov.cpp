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

#include "mechdyn/markov.hpp"

#include "mechdyn/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <sstream>
#include <string>

namespace mechdyn::markov {

namespace {

void check_mass(Eigen::Ref<Eigen::VectorXd const> const &mass, std::string const &what)
{
  if (mass.size() == 0)
  {
    throw InvalidArgument(what + ": empty distribution");
  }
  double sum = 0.0;
  for (Eigen::Index i = 0; i < mass.size(); ++i)
  {
    double const m = mass(i);
    if (!std::isfinite(m) || m < 0.0 || m > 1.0)
    {
      std::ostringstream msg;
      msg << what << ": entry " << i << " = " << m << " is not a probability";
      throw InvalidArgument(msg.str());
    }
    sum += m;
  }
  if (std::abs(sum - 1.0) > kMassTolerance)
  {
    std::ostringstream msg;
    msg.precision(17);
    msg << what << ": entries sum to " << sum << ", not 1";
    throw InvalidArgument(msg.str());
  }
}

Eigen::VectorXd to_vector(std::vector<double> const &v)
{
  return Eigen::Map<Eigen::VectorXd const>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::MatrixXd to_matrix(std::vector<std::vector<double>> const &rows)
{
  auto const      k = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd m(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
  {
    if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != k)
    {
      std::ostringstream msg;
      msg << "transition matrix row " << i << " has " << rows[static_cast<std::size_t>(i)].size()
          << " entries, expected " << k;
      throw DimensionError(msg.str());
    }
    for (Eigen::Index j = 0; j < k; ++j)
    {
      m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  }
  return m;
}

std::vector<std::vector<std::size_t>> adjacency(StochasticMatrix const &p)
{
  std::size_t const                     k = p.dim();
  std::vector<std::vector<std::size_t>> adj(k);
  for (std::size_t i = 0; i < k; ++i)
  {
    for (std::size_t j = 0; j < k; ++j)
    {
      if (p(i, j) > 0.0)
      {
        adj[i].push_back(j);
      }
    }
  }
  return adj;
}

}  // namespace

DistributionVector::DistributionVector(Eigen::VectorXd mass)
  : mass_(std::move(mass))
{
  check_mass(mass_, "distribution");
}

DistributionVector::DistributionVector(std::vector<double> const &mass)
  : DistributionVector(to_vector(mass))
{}

DistributionVector::DistributionVector(Eigen::VectorXd mass, Unchecked)
  : mass_(std::move(mass))
{}

DistributionVector DistributionVector::unchecked(Eigen::VectorXd mass)
{
  return DistributionVector(std::move(mass), Unchecked{});
}

DistributionVector DistributionVector::uniform(std::size_t k)
{
  if (k == 0)
  {
    throw InvalidArgument("distribution: empty");
  }
  return DistributionVector(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(k), 1.0 / static_cast<double>(k)),
                            Unchecked{});
}

DistributionVector DistributionVector::point_mass(std::size_t k, std::size_t state)
{
  if (state >= k)
  {
    throw InvalidArgument("distribution: point mass outside the state space");
  }
  Eigen::VectorXd v                         = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
  v(static_cast<Eigen::Index>(state)) = 1.0;
  return DistributionVector(std::move(v), Unchecked{});
}

StochasticMatrix::StochasticMatrix(Eigen::MatrixXd entries)
  : p_(std::move(entries))
{
  if (p_.rows() == 0 || p_.rows() != p_.cols())
  {
    std::ostringstream msg;
    msg << "transition matrix must be square and nonempty, got " << p_.rows() << "x" << p_.cols();
    throw DimensionError(msg.str());
  }
  for (Eigen::Index i = 0; i < p_.rows(); ++i)
  {
    check_mass(p_.row(i).transpose(), "transition matrix row " + std::to_string(i));
  }
}

StochasticMatrix::StochasticMatrix(std::vector<std::vector<double>> const &rows)
  : StochasticMatrix(to_matrix(rows))
{}

StochasticMatrix::StochasticMatrix(Eigen::MatrixXd entries, Unchecked)
  : p_(std::move(entries))
{}

StochasticMatrix StochasticMatrix::unchecked(Eigen::MatrixXd entries)
{
  return StochasticMatrix(std::move(entries), Unchecked{});
}

StochasticMatrix StochasticMatrix::identity(std::size_t k)
{
  auto const n = static_cast<Eigen::Index>(k);
  return StochasticMatrix(Eigen::MatrixXd::Identity(n, n));
}

StochasticMatrix StochasticMatrix::uniform(std::size_t k)
{
  auto const n = static_cast<Eigen::Index>(k);
  return StochasticMatrix(Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(k)), Unchecked{});
}

StochasticMatrix StochasticMatrix::symmetric_two_state(double stay)
{
  Eigen::MatrixXd m(2, 2);
  m << stay, 1.0 - stay, 1.0 - stay, stay;
  return StochasticMatrix(std::move(m));
}

double StochasticMatrix::operator()(std::size_t i, std::size_t j) const
{
  return p_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
}

DistributionVector StochasticMatrix::row(std::size_t i) const
{
  return DistributionVector::unchecked(p_.row(static_cast<Eigen::Index>(i)).transpose());
}

StochasticMatrix mat_power(StochasticMatrix const &p, unsigned long long t)
{
  auto const      n      = static_cast<Eigen::Index>(p.dim());
  Eigen::MatrixXd result = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd base   = p.matrix();
  while (t > 0)
  {
    if (t & 1ULL)
    {
      result = result * base;
    }
    t >>= 1ULL;
    if (t > 0)
    {
      base = base * base;
    }
  }
  return StochasticMatrix::unchecked(std::move(result));
}

std::vector<std::vector<std::size_t>> communicating_classes(StochasticMatrix const &p)
{
  // Iterative Tarjan.
  std::size_t const                     k   = p.dim();
  auto const                            adj = adjacency(p);
  std::vector<std::size_t>              index(k, SIZE_MAX), low(k, 0);
  std::vector<bool>                     on_stack(k, false);
  std::vector<std::size_t>              stack;
  std::vector<std::vector<std::size_t>> components;
  std::size_t                           counter = 0;

  for (std::size_t root = 0; root < k; ++root)
  {
    if (index[root] != SIZE_MAX)
    {
      continue;
    }
    std::vector<std::pair<std::size_t, std::size_t>> frames{{root, 0}};
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = true;

    while (!frames.empty())
    {
      auto &[v, next] = frames.back();
      if (next < adj[v].size())
      {
        std::size_t const w = adj[v][next++];
        if (index[w] == SIZE_MAX)
        {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = true;
          frames.emplace_back(w, 0);
        }
        else if (on_stack[w])
        {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      std::size_t const done = v;
      frames.pop_back();
      if (!frames.empty())
      {
        low[frames.back().first] = std::min(low[frames.back().first], low[done]);
      }
      if (low[done] == index[done])
      {
        std::vector<std::size_t> component;
        std::size_t              w = 0;
        do
        {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          component.push_back(w);
        } while (w != done);
        std::sort(component.begin(), component.end());
        components.push_back(std::move(component));
      }
    }
  }
  return components;
}

std::vector<std::vector<std::size_t>> closed_classes(StochasticMatrix const &p)
{
  auto const                            components = communicating_classes(p);
  std::vector<std::size_t>              owner(p.dim());
  std::vector<std::vector<std::size_t>> closed;
  for (std::size_t c = 0; c < components.size(); ++c)
  {
    for (auto s : components[c])
    {
      owner[s] = c;
    }
  }
  for (std::size_t c = 0; c < components.size(); ++c)
  {
    bool leaks = false;
    for (auto s : components[c])
    {
      for (std::size_t j = 0; j < p.dim() && !leaks; ++j)
      {
        leaks = p(s, j) > 0.0 && owner[j] != c;
      }
    }
    if (!leaks)
    {
      closed.push_back(components[c]);
    }
  }
  return closed;
}

std::size_t period(StochasticMatrix const &p, std::size_t state)
{
  auto const components = communicating_classes(p);
  auto const it         = std::find_if(components.begin(), components.end(), [state](auto const &c) {
    return std::binary_search(c.begin(), c.end(), state);
  });
  auto const &component = *it;

  auto const inside = [&component](std::size_t s) {
    return std::binary_search(component.begin(), component.end(), s);
  };

  // BFS levels from `state` restricted to the component; every edge u->v inside
  // the component closes a cycle-length difference level(u) + 1 - level(v).
  std::vector<long long>  level(p.dim(), -1);
  std::queue<std::size_t> frontier;
  level[state] = 0;
  frontier.push(state);
  std::size_t g = 0;
  while (!frontier.empty())
  {
    std::size_t const u = frontier.front();
    frontier.pop();
    for (std::size_t v = 0; v < p.dim(); ++v)
    {
      if (p(u, v) <= 0.0 || !inside(v))
      {
        continue;
      }
      if (level[v] < 0)
      {
        level[v] = level[u] + 1;
        frontier.push(v);
      }
      else
      {
        auto const diff = static_cast<std::size_t>(std::llabs(level[u] + 1 - level[v]));
        g               = std::gcd(g, diff);
      }
    }
  }
  return g;
}

ChainClass classify_chain(StochasticMatrix const &p)
{
  auto const components = communicating_classes(p);
  ChainClass result;
  result.irreducible = components.size() == 1;
  result.aperiodic   = true;
  for (auto const &component : components)
  {
    std::size_t const d = period(p, component.front());
    // d == 0: a lone transient state with no self-loop carries no cycle.
    if (d > 1)
    {
      result.aperiodic = false;
    }
  }
  return result;
}

DistributionVector stationary_distribution(StochasticMatrix const &p)
{
  auto const closed = closed_classes(p);
  if (closed.size() != 1)
  {
    std::ostringstream msg;
    msg << "stationary distribution is not unique: chain has " << closed.size() << " closed classes";
    throw NotUnique(msg.str());
  }

  auto const      k = static_cast<Eigen::Index>(p.dim());
  Eigen::MatrixXd a = p.matrix().transpose() - Eigen::MatrixXd::Identity(k, k);
  a.row(k - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(k);
  b(k - 1)          = 1.0;
  Eigen::VectorXd mu = a.fullPivLu().solve(b);
  // Transient states carry zero mass; clip rounding noise there.
  for (Eigen::Index i = 0; i < k; ++i)
  {
    mu(i) = std::max(mu(i), 0.0);
  }
  mu /= mu.sum();
  return DistributionVector::unchecked(std::move(mu));
}

}  // namespace mechdyn::markov
