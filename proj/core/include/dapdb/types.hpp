#pragma once

#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dapdb {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// One vector per agent, indexed by node id.
using NodeVectors = std::vector<Vector>;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Bad input: inconsistent sizes, violated preconditions, malformed files.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Failure while running a solver: NaN/Inf state, runaway backtracking,
// non-convergence of a reference solve.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dapdb
