#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace fomc {

/// Base class for all errors raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument or violated precondition (bad dimensions, domain).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A matrix that must be invertible is (numerically) singular.
class SingularMatrix : public Error {
 public:
  SingularMatrix(const std::string& name, double condition)
      : Error("matrix " + name + " is singular (condition number " +
              std::to_string(condition) + ")"),
        matrix_name(name),
        condition_number(condition) {}
  std::string matrix_name;
  double condition_number;
};

/// An iterative solver stopped before reaching its tolerance.
class ConvergenceFailure : public Error {
 public:
  ConvergenceFailure(const std::string& what, std::vector<double> history)
      : Error(what), residual_history(std::move(history)) {}
  std::vector<double> residual_history;
};

}  // namespace fomc
