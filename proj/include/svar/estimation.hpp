#pragma once

#include "svar/common.hpp"
#include "svar/var_model.hpp"

#include <vector>

namespace svar {

/// Lagged regressors L (Kp x n, column t = (Y_{t-1}', ..., Y_{t-p}')') and
/// responses Y (K x n) for t = presample+1..T.
struct StackedDesign {
  Matrix lags;
  Matrix responses;
  int order = 0;
  int presample = 0;
};

StackedDesign stacked_design(const Matrix& data, int order, int presample);

/// Sufficient statistics of a stacked design: LL', YL', YY' and n.
/// Everything the Gaussian VAR fitters need is a function of these.
struct LagMoments {
  Matrix lag_gram;    // Kp x Kp
  Matrix cross;       // K x Kp
  Matrix resp_gram;   // K x K
  int rows = 0;
  int order = 0;
  int dim = 0;
  int presample = 0;

  static LagMoments from(const StackedDesign& d);
  /// Moments of a lower order on the same response sample.
  [[nodiscard]] LagMoments truncated(int order) const;
  /// Residual cross-product (Y - AL)(Y - AL)' for stacked A = [A_1 .. A_p].
  [[nodiscard]] Matrix residual_gram(const Matrix& stacked_coeffs) const;
};

struct MleOptions {
  double tol = 1e-8;
  int max_iter = 200;
  /// Observations conditioned on; -1 means the fitted order.
  int presample = -1;
  bool demean = true;
};

struct ConstrainedFit {
  VarModel model;
  SparsityPattern pattern{0, 1};
  double loglik = 0.0;
  Vector gamma;             // free coefficients in pattern order
  Matrix asymp_cov;         // covariance of gamma, [R'(LL' (x) Sigma^-1)R]^-1
  int iterations = 0;
  bool converged = false;
  std::vector<double> neg2_loglik_trace;  // -2 log L after each outer iteration
  int rows = 0;             // response sample size n
  int presample = 0;
};

/// Constrained Gaussian ML for a VAR(p) whose non-zero coefficients are
/// restricted to `pattern`, alternating GLS for the coefficients with the
/// residual covariance (divisor n = T - presample) from Sigma = I.
ConstrainedFit constrained_mle(const MultiSeries& series, int order, const SparsityPattern& pattern,
                               const MleOptions& options = {});

/// Same fit from precomputed moments of centered data; `mean` goes into the model.
ConstrainedFit constrained_mle(const LagMoments& moments, const SparsityPattern& pattern,
                               const Vector& mean, const MleOptions& options = {});

/// Closed-form multivariate least squares [A_1..A_p] = YL'(LL')^{-1}.
Matrix least_squares_coeffs(const LagMoments& moments);

struct TStatistic {
  CoeffIndex index;
  double estimate = 0.0;
  double std_error = 0.0;
  double t = 0.0;
};

/// Ratio of each free coefficient to its asymptotic standard error, in
/// pattern order. Exactly zero estimates give t = 0.
std::vector<TStatistic> t_statistics(const ConstrainedFit& fit);

/// Stacks A_1..A_p side by side into K x Kp.
Matrix stack_coeffs(const std::vector<Matrix>& coeffs, int dim);
std::vector<Matrix> unstack_coeffs(const Matrix& stacked, int order);

}  // namespace svar
