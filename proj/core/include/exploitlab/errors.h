// Copyright 2026 The ExploitLab Authors
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

#ifndef EXPLOITLAB_ERRORS_H_
#define EXPLOITLAB_ERRORS_H_

#include <stdexcept>
#include <string>

namespace exploitlab {

// Process exit codes used by the CLI.
inline constexpr int kExitSuccess = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitRuntimeError = 3;
inline constexpr int kExitInvariantViolation = 4;

// Caller violated an API precondition (bad action, stepping a finished
// episode, mismatched dimensions).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A configuration value failed validation. `field()` names the offending
// configuration key.
class ConfigError : public UsageError {
 public:
  ConfigError(std::string field, const std::string& message)
      : UsageError(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// Non-finite value encountered during numerical work.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Persisted data is truncated or its content hash does not match.
class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An internal contract was broken at runtime (e.g. a frozen policy changed).
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace exploitlab

#endif  // EXPLOITLAB_ERRORS_H_
