#include "svar/common.hpp"

#include <algorithm>
#include <cmath>

namespace svar {

void check_series(const MultiSeries& series) {
  if (series.length() == 0 || series.dim() == 0) {
    throw InvalidInput("series is empty");
  }
  if (!series.values.allFinite()) {
    throw InvalidInput("series contains non-finite values");
  }
}

CenteredSeries center(const MultiSeries& series) {
  check_series(series);
  CenteredSeries out;
  out.means = series.values.colwise().mean().transpose();
  out.values = series.values.rowwise() - out.means.transpose();
  return out;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

namespace {

Matrix sym_power(const Matrix& spd, double power) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(spd);
  if (eig.info() != Eigen::Success) {
    throw NumericalError("eigendecomposition failed");
  }
  const Vector& ev = eig.eigenvalues();
  if (ev.minCoeff() <= 0.0) {
    throw DomainError("matrix is not positive definite");
  }
  Vector d = ev.array().pow(power);
  return eig.eigenvectors() * d.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

Matrix sym_sqrt(const Matrix& spd) { return sym_power(spd, 0.5); }

Matrix sym_inv_sqrt(const Matrix& spd) { return sym_power(spd, -0.5); }

double log_det_spd(const Matrix& spd) {
  Eigen::LLT<Matrix> llt(spd);
  if (llt.info() != Eigen::Success) {
    throw DomainError("matrix is not positive definite");
  }
  const Matrix& l = llt.matrixL();
  return 2.0 * l.diagonal().array().log().sum();
}

bool is_symmetric(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * std::max(1.0, m.cwiseAbs().maxCoeff());
}

}  // namespace svar
