// Copyright 2026 The covscreen Authors. All Rights Reserved.
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
#include <utility>
#include <vector>

namespace covscreen {

/// Base class of every error raised by the toolkit.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Input does not follow the canonical cohort layout (header, column set).
class SchemaError : public Error {
  public:
    using Error::Error;
};

/// A single data row failed to parse or violated a record invariant.
class RowError : public Error {
  public:
    RowError(std::size_t line, std::string column, const std::string &message)
        : Error("line " + std::to_string(line) + ": " + message), line_{line},
          column_{std::move(column)} {}

    std::size_t line() const noexcept { return line_; }
    const std::string &column() const noexcept { return column_; }

  private:
    std::size_t line_;
    std::string column_;
};

/// Data cannot support the requested operation (empty cohort, too few rows...).
class DataError : public Error {
  public:
    using Error::Error;
};

/// Model fitting failed. Carries a human readable iteration trace when available.
class FitError : public Error {
  public:
    explicit FitError(const std::string &message, std::vector<std::string> trace = {})
        : Error(message), trace_{std::move(trace)} {}

    const std::vector<std::string> &trace() const noexcept { return trace_; }

  private:
    std::vector<std::string> trace_;
};

class ConvergenceError : public FitError {
  public:
    using FitError::FitError;
};

/// Coefficients diverge because a term separates the classes.
class SeparationError : public FitError {
  public:
    SeparationError(std::string term, std::vector<std::string> trace)
        : FitError("perfect separation detected on term '" + term + "'", std::move(trace)),
          term_{std::move(term)} {}

    const std::string &term() const noexcept { return term_; }

  private:
    std::string term_;
};

/// A complete-case model was asked to score a record lacking required fields.
class InsufficientDataError : public Error {
  public:
    explicit InsufficientDataError(std::vector<std::string> missing)
        : Error(make_message(missing)), missing_{std::move(missing)} {}

    const std::vector<std::string> &missing_fields() const noexcept { return missing_; }

  private:
    static std::string make_message(const std::vector<std::string> &missing) {
        std::string text = "insufficient data, missing:";
        for (const auto &name : missing) {
            text += ' ';
            text += name;
        }
        return text;
    }

    std::vector<std::string> missing_;
};

} // namespace covscreen
