#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace balasso {

// A distribution or model parameter outside its domain (non-positive shape,
// mismatched dimensions, malformed group map, ...).
class ParameterDomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Factorization failure. Carries a conditioning diagnostic of the offending
// symmetric matrix (ratio of extreme eigenvalues, +inf when indefinite).
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double condition)
      : std::runtime_error(what + " (condition estimate " + std::to_string(condition) + ")"),
        condition_(condition) {}
  double condition() const { return condition_; }

 private:
  double condition_;
};

// Iterative method ran out of iterations. The last iterate is kept so callers
// can inspect or warm-start from it.
class NonConvergenceError : public std::runtime_error {
 public:
  NonConvergenceError(const std::string& what, Eigen::VectorXd last_iterate, long iterations)
      : std::runtime_error(what), last_iterate_(std::move(last_iterate)), iterations_(iterations) {}
  const Eigen::VectorXd& last_iterate() const { return last_iterate_; }
  long iterations() const { return iterations_; }

 private:
  Eigen::VectorXd last_iterate_;
  long iterations_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input text. Row and column are 1-based; 0 means "not applicable".
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t row, std::size_t column)
      : std::runtime_error(what), row_(row), column_(column) {}
  std::size_t row() const { return row_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

class ChecksumError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ManifestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Symmetric-matrix conditioning used in NumericalError messages.
double condition_estimate(const Eigen::MatrixXd& symmetric);

}  // namespace balasso
