#pragma once

#include <stdexcept>
#include <string>

namespace arratia {

/// Precondition violated by the caller (bad sizes, out-of-range values).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An integrand tried to read data outside its adapted prefix.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Least-squares design matrix is numerically singular.
class DegenerateRegression : public std::runtime_error {
 public:
  DegenerateRegression(const std::string& what, double condition_number)
      : std::runtime_error(what), condition_number_(condition_number) {}
  double condition_number() const { return condition_number_; }

 private:
  double condition_number_;
};

}  // namespace arratia
