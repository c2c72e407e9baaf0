/*
 * Copyright 2026 The nodedp Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef NODEDP_COMMON_H_
#define NODEDP_COMMON_H_

#include <cstdint>
#include <stdexcept>
#include <string>

namespace nodedp {

using NodeId = std::int32_t;

// Malformed input text (bad row, bad number). Carries the 1-based line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& what)
      : std::runtime_error(file + ":" + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Structurally invalid data: dangling ids, duplicates, inconsistent shapes.
class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// No noise level in the search range reaches the requested budget.
class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid parameter combination passed to an operation.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Numerical failure during an accounting evaluation or a training run.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nodedp

#endif  // NODEDP_COMMON_H_
