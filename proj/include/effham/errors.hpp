#pragma once

#include <stdexcept>
#include <string>

namespace effham {

/// Bad user input: non-finite values, dimension mismatches, malformed files.
class InvalidInputError : public std::runtime_error {
public:
  explicit InvalidInputError(const std::string& what) : std::runtime_error(what) {}
};

/// A path optimization ran out of budget; carries the best value found so far.
class OptimizationFailure : public std::runtime_error {
public:
  OptimizationFailure(const std::string& what, double best_value)
      : std::runtime_error(what), best_value(best_value) {}
  double best_value;
};

/// Linear solver did not reach the requested residual.
class SolverFailure : public std::runtime_error {
public:
  SolverFailure(const std::string& what, double residual, int iterations)
      : std::runtime_error(what), residual(residual), iterations(iterations) {}
  double residual;
  int iterations;
};

/// Configuration search returned without any converged restart.
class SearchFailure : public std::runtime_error {
public:
  SearchFailure(const std::string& what, double best_value)
      : std::runtime_error(what), best_value(best_value) {}
  double best_value;
};

/// Legendre transform maximizer landed on the boundary of the supplied lattice.
class GridTooSmallError : public std::runtime_error {
public:
  explicit GridTooSmallError(const std::string& what) : std::runtime_error(what) {}
};

/// Rejection sampler exceeded its attempt budget.
class SamplingError : public std::runtime_error {
public:
  explicit SamplingError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace effham
