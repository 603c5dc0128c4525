#pragma once
//------------------------------------------------------------------------------
//
//   Copyright 2026 The mdcc Authors
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.
//
//------------------------------------------------------------------------------

#include <stdexcept>
#include <string>

namespace mdcc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Tensor or vector dimensions do not line up.
class ShapeError : public Error
{
public:
  using Error::Error;
};

/// An operation was called in the wrong lifecycle state (e.g. backward
/// without a recorded forward pass, scoring an uncalibrated model).
class StateError : public Error
{
public:
  using Error::Error;
};

/// Invalid configuration value. `field()` names the offending key.
class ConfigError : public Error
{
public:
  ConfigError(std::string field, std::string const &what)
    : Error(field + ": " + what)
    , field_(std::move(field))
  {}

  std::string const &field() const noexcept
  {
    return field_;
  }

private:
  std::string field_;
};

/// Malformed input file (dataset, model, config).
class ParseError : public Error
{
public:
  using Error::Error;
};

}  // namespace mdcc
