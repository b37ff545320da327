#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace svar {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;

/// Bad user input: malformed data, out-of-range arguments, parse failures.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A model or matrix outside the domain an operation is defined on
/// (non-causal VAR, covariance not positive definite).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Numerical breakdown: singular matrices, failed factorizations.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Estimation failure inside a fitter (rank-deficient normal equations).
class EstimationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// T x K observations, one row per time point.
struct MultiSeries {
  Matrix values;

  MultiSeries() = default;
  explicit MultiSeries(Matrix v) : values(std::move(v)) {}

  [[nodiscard]] int length() const { return static_cast<int>(values.rows()); }
  [[nodiscard]] int dim() const { return static_cast<int>(values.cols()); }
};

/// Series with column means removed; the means are kept for back-transformation.
struct CenteredSeries {
  Matrix values;
  Vector means;
};

/// Throws InvalidInput on empty input or non-finite entries.
void check_series(const MultiSeries& series);

CenteredSeries center(const MultiSeries& series);

/// Deterministic 64-bit mixer used to derive per-replication seeds.
std::uint64_t splitmix64(std::uint64_t x);

/// Symmetric positive-definite square root U diag(sqrt(k)) U'.
Matrix sym_sqrt(const Matrix& spd);
/// Symmetric inverse square root U diag(1/sqrt(k)) U'.
Matrix sym_inv_sqrt(const Matrix& spd);

/// log|S| through a Cholesky factor; throws DomainError if S is not PD.
double log_det_spd(const Matrix& spd);

bool is_symmetric(const Matrix& m, double tol);

}  // namespace svar
