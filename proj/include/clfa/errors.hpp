#pragma once

#include <stdexcept>
#include <string>

namespace clfa {

/// Bad arguments, inconsistent dimensions, invalid configuration. CLI exit code 2.
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Malformed or unusable input data (parse failures, non-finite values). CLI exit code 3.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Numerical failure (factorization breakdown, non-finite intermediate). CLI exit code 4.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace clfa
