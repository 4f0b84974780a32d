// Copyright 2026 The adaptmc Authors
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
#include <vector>

namespace adaptmc {

/// A single failed invariant, located by an index path such as
/// "transitions[1][0]".
struct Violation {
  std::string path;
  std::string message;
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidModel : public Error {
 public:
  explicit InvalidModel(std::vector<Violation> violations)
      : Error(Summarize(violations)), violations_(std::move(violations)) {}

  const std::vector<Violation>& violations() const { return violations_; }

 private:
  static std::string Summarize(const std::vector<Violation>& v) {
    std::string out = "invalid model:";
    for (const auto& item : v) out += " " + item.path + ": " + item.message + ";";
    return out;
  }
  std::vector<Violation> violations_;
};

/// The stationary system has no unique solution (reducible chain with more
/// than one closed class).
class NonErgodic : public Error {
 public:
  using Error::Error;
};

class StrategySpaceTooLarge : public Error {
 public:
  using Error::Error;
};

class NoFeasibleStrategy : public Error {
 public:
  using Error::Error;
};

/// Robot has no free neighbour on any of its eight headings.
class Stuck : public Error {
 public:
  using Error::Error;
};

}  // namespace adaptmc
