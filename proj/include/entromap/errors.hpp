#pragma once

#include <stdexcept>
#include <string>

namespace entromap {

/// Raised when an argument violates an operation's precondition.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when distribution or matrix parameters are unusable
/// (asymmetric covariance, failed factorization, singular matrix).
class InvalidParameter : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// Raised when a computation produces non-finite values.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace entromap
