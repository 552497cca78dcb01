#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace silt {

/// %g formatting for error messages.
inline std::string num_str(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad argument: out-of-range value, malformed interval, k too large, ...
class InputError : public Error {
 public:
  using Error::Error;
};

// Two grid functions (or a grid function and a path grid) disagree on n.
class ResolutionError : public Error {
 public:
  using Error::Error;
};

class EmptyBasisError : public Error {
 public:
  using Error::Error;
};

// A Gram or covariance matrix is singular where a positive definite one is needed.
class DegeneracyError : public Error {
 public:
  DegeneracyError(const std::string& what, double det) : Error(what), det_(det) {}
  double det() const { return det_; }

 private:
  double det_;
};

// Monte Carlo integrand produced too many non-finite samples.
class IntegrabilityError : public Error {
 public:
  IntegrabilityError(const std::string& what, double rejection_fraction)
      : Error(what), rejection_fraction_(rejection_fraction) {}
  double rejection_fraction() const { return rejection_fraction_; }

 private:
  double rejection_fraction_;
};

class QuadratureError : public Error {
 public:
  using Error::Error;
};

// Requested a case the implementation does not cover (e.g. k >= 4 for the Wiener beta).
class ScopeError : public Error {
 public:
  using Error::Error;
};

}  // namespace silt
