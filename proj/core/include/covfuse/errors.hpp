// Copyright 2026 The covfuse Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace covfuse {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operands have incompatible shapes.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// An argument violates a documented precondition (range, structure).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure failed: loss of definiteness, singular factor,
/// exhausted retry budget.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent configuration / input file content.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Filesystem failure.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace covfuse
