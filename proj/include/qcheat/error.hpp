#pragma once

#include <stdexcept>
#include <string>

namespace qcheat {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad arguments, dimension mismatches, unparsable files.
class InputError : public Error {
 public:
  explicit InputError(const std::string& what, int line = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// A numerical procedure did not reach its tolerance. Carries the best
/// estimate obtained so far.
class NumericFailure : public Error {
 public:
  NumericFailure(const std::string& what, double best_estimate, double best_error)
      : Error(what), estimate_(best_estimate), error_(best_error) {}
  double best_estimate() const noexcept { return estimate_; }
  double best_error() const noexcept { return error_; }

 private:
  double estimate_;
  double error_;
};

/// A mathematical invariant that must hold by construction was violated.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace qcheat
