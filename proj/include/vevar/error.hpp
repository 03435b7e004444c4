#pragma once

#include <stdexcept>
#include <string>

namespace vevar {

/// Bad input: malformed data, inconsistent dimensions, invalid configuration.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical breakdown: failed factorization, non-finite ELBO, monotonicity violation.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

}  // namespace vevar
