#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace nlab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad kernel table, inconsistent grid, bad config line.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A field was read outside the square where no farfield rule is defined.
class FarfieldMissing : public Error {
 public:
  FarfieldMissing(int i, int j)
      : Error("farfield rule missing at node (" + std::to_string(i) + ", " + std::to_string(j) + ")"),
        i(i), j(j) {}
  int i, j;
};

/// An iterative method stopped without meeting its tolerance.
class NonConvergence : public Error {
 public:
  NonConvergence(const std::string& what, std::vector<double> history)
      : Error(what), history(std::move(history)) {}
  std::vector<double> history;
};

/// The Jacobian solve of a Newton step broke down.
class LinearSolverBreakdown : public Error {
 public:
  using Error::Error;
};

/// The principal eigenvalue is not positive: the input is not stable.
class StabilityViolation : public Error {
 public:
  StabilityViolation(double R, double lambda)
      : Error("stability violation: lambda_R = " + std::to_string(lambda) + " at R = " + std::to_string(R)),
        R(R), lambda(lambda) {}
  double R, lambda;
};

/// The constructed solution of the linearized equation is not positive.
class PositivityFailure : public Error {
 public:
  using Error::Error;
};

/// A config line that does not parse; `line` is 1-based, 0 when the
/// problem is not tied to a line.
class ConfigError : public InvalidArgument {
 public:
  ConfigError(int line, const std::string& what)
      : InvalidArgument(line > 0 ? "config line " + std::to_string(line) + ": " + what : "config: " + what),
        line(line) {}
  int line;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace nlab
