// Copyright 2026 The PITL Attack Authors. All Rights Reserved.
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

#ifndef PITL_ERRORS_HPP_
#define PITL_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace pitl {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Array or image dimensions that do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Caller broke a documented precondition (e.g. unsorted ranking).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// Scene whose presence-rate denominator vanishes somewhere in the region.
class DegenerateScene : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

/// The victim could not produce a depth map (crash, timeout, bad reply).
class VictimFailure : public Error {
 public:
  using Error::Error;
};

class UnsupportedProtocol : public VictimFailure {
 public:
  using VictimFailure::VictimFailure;
};

}  // namespace pitl

#endif  // PITL_ERRORS_HPP_
