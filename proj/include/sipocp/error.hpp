#pragma once

#include <stdexcept>
#include <string>

namespace sipocp {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation (t outside [0,T], NaN input, ...).
class DomainError : public Error
{
public:
  using Error::Error;
};

/// Malformed or inconsistent problem data; `field()` names the offending entry when known.
class ValidationError : public Error
{
public:
  explicit ValidationError(const std::string & msg, std::string field = {})
      : Error(field.empty() ? msg : field + ": " + msg), field_(std::move(field)), message_(msg)
  {}

  const std::string & field() const noexcept { return field_; }
  /// the message without the field prefix
  const std::string & message() const noexcept { return message_; }

private:
  std::string field_;
  std::string message_;
};

/// A numerical routine failed to reach its tolerance.
class NumericalError : public Error
{
public:
  using Error::Error;
};

/// No feasible point exists (or none was found) for a constrained subproblem.
class InfeasibleError : public Error
{
public:
  using Error::Error;
};

}  // namespace sipocp
