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


#include "mechdyn/error.hpp"
#include "mechdyn/markov.hpp"
#include "random_models.hpp"

#include <doctest.h>

#include <algorithm>

using namespace mechdyn;
using namespace mechdyn::markov;
using testing::Rng;

TEST_CASE("distribution and matrix validation")
{
  CHECK_THROWS_AS(DistributionVector(std::vector<double>{0.5, 0.6}), InvalidArgument);
  CHECK_THROWS_AS(DistributionVector(std::vector<double>{1.2, -0.2}), InvalidArgument);
  CHECK_THROWS_AS(StochasticMatrix(std::vector<std::vector<double>>{{0.5, 0.5}, {0.3, 0.6}}), InvalidArgument);
  CHECK_THROWS_AS(StochasticMatrix(std::vector<std::vector<double>>{{1.0, 0.0}}), InvalidArgument);
  CHECK_NOTHROW(StochasticMatrix(std::vector<std::vector<double>>{{0.5, 0.5}, {0.0, 1.0}}));
  CHECK(DistributionVector::point_mass(3, 2)[2] == 1.0);
  CHECK(StochasticMatrix::symmetric_two_state(0.7)(0, 1) == doctest::Approx(0.3));
}

TEST_CASE("matrix power matches repeated naive products")
{
  Rng rng(11);
  for (int trial = 0; trial < 30; ++trial)
  {
    auto const        k = testing::pick(rng, 1, 5);
    auto const        p = testing::random_stochastic(rng, k);
    unsigned const    t = static_cast<unsigned>(testing::pick(rng, 0, 40));
    Eigen::MatrixXd const diff = mat_power(p, t).matrix() - testing::naive_power(p.matrix(), t);
    CHECK(diff.cwiseAbs().maxCoeff() <= 1e-12);
  }
  CHECK(mat_power(StochasticMatrix::uniform(3), 0).matrix().isIdentity());
}

TEST_CASE("stationary distribution is the limit of power iteration")
{
  Rng rng(12);
  for (int trial = 0; trial < 30; ++trial)
  {
    auto const k  = testing::pick(rng, 1, 6);
    auto const p  = testing::random_stochastic(rng, k, 0.02);
    auto const pi = stationary_distribution(p);
    Eigen::RowVectorXd mu = Eigen::RowVectorXd::Constant(static_cast<Eigen::Index>(k), 1.0 / static_cast<double>(k));
    for (int it = 0; it < 5000; ++it)
    {
      mu = mu * p.matrix();
    }
    CHECK((mu.transpose() - pi.vector()).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((pi.vector().transpose() * p.matrix() - pi.vector().transpose()).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("stationary distribution with transient states and multiple classes")
{
  // State 0 is transient and drains into the closed class {1, 2}.
  StochasticMatrix const p(std::vector<std::vector<double>>{{0.5, 0.25, 0.25}, {0.0, 0.1, 0.9}, {0.0, 0.6, 0.4}});
  auto const             pi = stationary_distribution(p);
  CHECK(pi[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(pi[1] == doctest::Approx(0.4));
  CHECK(pi[2] == doctest::Approx(0.6));

  CHECK_THROWS_AS(stationary_distribution(StochasticMatrix::identity(2)), NotUnique);
}

TEST_CASE("classification of small chains")
{
  auto const cycle = StochasticMatrix(std::vector<std::vector<double>>{{0, 1, 0}, {0, 0, 1}, {1, 0, 0}});
  auto const c     = classify_chain(cycle);
  CHECK(c.irreducible);
  CHECK_FALSE(c.aperiodic);
  CHECK(period(cycle, 0) == 3);

  auto const lazy = StochasticMatrix::symmetric_two_state(0.5);
  CHECK(classify_chain(lazy).irreducible);
  CHECK(classify_chain(lazy).aperiodic);

  auto const id = StochasticMatrix::identity(3);
  CHECK_FALSE(classify_chain(id).irreducible);
  CHECK(communicating_classes(id).size() == 3);
  CHECK(closed_classes(id).size() == 3);

  StochasticMatrix const absorbing(std::vector<std::vector<double>>{{0.5, 0.5}, {0.0, 1.0}});
  CHECK(communicating_classes(absorbing).size() == 2);
  auto const closed = closed_classes(absorbing);
  REQUIRE(closed.size() == 1);
  CHECK(closed.front() == std::vector<std::size_t>{1});
}

TEST_CASE("irreducible aperiodic chains have powers converging to rank one")
{
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial)
  {
    auto const p = testing::random_stochastic(rng, testing::pick(rng, 2, 5), 0.05);
    REQUIRE(classify_chain(p).irreducible);
    REQUIRE(classify_chain(p).aperiodic);
    Eigen::MatrixXd const limit = mat_power(p, 1000).matrix();
    auto const            pi    = stationary_distribution(p);
    for (Eigen::Index i = 0; i < limit.rows(); ++i)
    {
      CHECK((limit.row(i).transpose() - pi.vector()).cwiseAbs().maxCoeff() <= 1e-10);
    }
  }
}
