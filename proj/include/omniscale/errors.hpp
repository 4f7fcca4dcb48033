/*
 * Copyright 2026 The omniscale Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef OMNISCALE_ERRORS_HPP
#define OMNISCALE_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace omniscale {

using InvalidArgument = std::invalid_argument;

// Channel budget cannot fit even one channel per branch.
class InfeasibleBudget : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Batch norm in training mode over a population of one.
class DegenerateBatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}

  // 1-based; 0 when the error is not tied to a line.
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class EmptyDataset : public ParseError {
 public:
  using ParseError::ParseError;
};

// Training diverged (non-finite loss).
class AbortedRun : public std::runtime_error {
 public:
  AbortedRun(const std::string& what, int epoch)
      : std::runtime_error(what + " at epoch " + std::to_string(epoch)), epoch_(epoch) {}

  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

}  // namespace omniscale

#endif  // OMNISCALE_ERRORS_HPP
