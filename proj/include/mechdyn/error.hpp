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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mechdyn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// An input violates a type invariant (row sums, bounds, dimensions).
class InvalidArgument : public Error
{
public:
  using Error::Error;
};

class DimensionError : public InvalidArgument
{
public:
  using InvalidArgument::InvalidArgument;
};

class NotIncreasing : public InvalidArgument
{
public:
  using InvalidArgument::InvalidArgument;
};

/// The chain has more than one closed communicating class.
class NotUnique : public Error
{
public:
  using Error::Error;
};

/// Value iteration hit its iteration cap before the stopping rule fired.
class NonConvergence : public Error
{
public:
  NonConvergence(std::string const &what, double discount, std::size_t cap)
    : Error(what)
    , discount_(discount)
    , cap_(cap)
  {}

  double      discount() const { return discount_; }
  std::size_t cap() const { return cap_; }

private:
  double      discount_;
  std::size_t cap_;
};

/// A density needed as a divisor is numerically zero.
class DensityZero : public Error
{
public:
  DensityZero(std::string const &what, double theta1, double theta2)
    : Error(what)
    , theta1_(theta1)
    , theta2_(theta2)
  {}

  double theta1() const { return theta1_; }
  double theta2() const { return theta2_; }

private:
  double theta1_;
  double theta2_;
};

/// Virtual valuations are not monotone, so pointwise threshold rules are not optimal.
class NotRegular : public Error
{
public:
  NotRegular(std::string const &what, double theta1, double theta2)
    : Error(what)
    , theta1_(theta1)
    , theta2_(theta2)
  {}

  double theta1() const { return theta1_; }
  double theta2() const { return theta2_; }

private:
  double theta1_;
  double theta2_;
};

}  // namespace mechdyn
