// Copyright Contributors to the Splatforge Project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace splatforge {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
  public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed input file or document. `field` names the offending property/key when known.
class ParseError : public Error {
  public:
    ParseError(std::string source, std::string field, const std::string& what)
        : Error(source.empty() ? what : source + ": " + what),
          source_(std::move(source)),
          field_(std::move(field)) {}

    const std::string& source() const noexcept { return source_; }
    const std::string& field() const noexcept { return field_; }

  private:
    std::string source_;
    std::string field_;
};

/// A value violates a domain invariant.
class ValidationError : public Error {
  public:
    ValidationError(std::string field, const std::string& what)
        : Error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

  private:
    std::string field_;
};

class IoError : public Error {
  public:
    using Error::Error;
};

/// Numerical failure inside an iterative solver (degenerate system, non-finite iterate).
class SolverError : public Error {
  public:
    using Error::Error;
};

class ConfigError : public Error {
  public:
    using Error::Error;
};

}  // namespace splatforge
