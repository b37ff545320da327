#pragma once

#include "svar/estimation.hpp"

#include <optional>
#include <string>
#include <vector>

namespace svar {

enum class LossKind { SS, LL };

std::string to_string(LossKind kind);

/// Penalized quadratic  alpha' G alpha - 2 b' alpha + c + lambda ||alpha||_1,
/// the common form of both Lasso-VAR targets for a fixed noise covariance.
struct LassoProblem {
  Matrix gram;     // d x d, symmetric PSD
  Vector linear;   // b
  double constant = 0.0;

  [[nodiscard]] double objective(const Vector& alpha, double lambda) const;
  /// Smallest lambda with alpha = 0 as the solution: 2 max |b|.
  [[nodiscard]] double lambda_max() const;
};

/// Largest violation of the lasso subgradient conditions
/// (2(G a - b) + lambda sign(a) = 0 on the support, |2(G a - b)| <= lambda off it).
double kkt_residual(const LassoProblem& problem, const Vector& alpha, double lambda);

struct CoordinateDescentOptions {
  double coef_tol = 1e-7;
  double kkt_tol = 1e-7;
  int max_sweeps = 10000;
};

struct CoordinateDescentResult {
  Vector alpha;
  int sweeps = 0;
  bool converged = false;
  std::vector<double> objective_trace;  // after each full sweep
};

/// Cyclic coordinate descent with soft-thresholding, warm-started at `start`.
/// Stops once a full sweep moves no coefficient by more than coef_tol and
/// the KKT residual is below kkt_tol.
CoordinateDescentResult coordinate_descent(const LassoProblem& problem, double lambda, const Vector& start,
                                           const CoordinateDescentOptions& options = {}, bool trace = false);

/// Sum-of-squares target ||y - (L' (x) I) alpha||^2 + lambda ||alpha||_1.
LassoProblem ss_problem(const LagMoments& moments);

/// Likelihood target for fixed Sigma, recast as least squares on responses
/// (I (x) Sigma^{-1/2}) y and regressors L' (x) Sigma^{-1/2}; the log-det
/// term is carried in the constant.
LassoProblem ll_problem(const LagMoments& moments, const Matrix& sigma);

struct LassoOptions {
  CoordinateDescentOptions cd;
  double outer_tol = 1e-6;
  /// LL outer loop also requires the coefficient KKT conditions to hold at
  /// the updated covariance.
  double outer_kkt_tol = 1e-6;
  int max_outer = 100;
  bool demean = true;
  /// Penalize coefficients of unit-variance regressors instead of raw ones.
  bool standardize = false;
  /// Lasso-LL only: hold the noise covariance fixed instead of updating it.
  std::optional<Matrix> fixed_sigma;
};

struct LassoFit {
  VarModel model;
  double lambda = 0.0;
  LossKind loss = LossKind::SS;
  double objective = 0.0;
  std::optional<double> cv_error;
  bool converged = false;
  int outer_iterations = 0;
  int sweeps = 0;
  Vector alpha;                          // vec(A_1..A_p)
  std::vector<double> objective_trace;   // LL: value after each outer iteration
  std::vector<std::string> warnings;

  [[nodiscard]] int nonzero_count() const { return model.nonzero_count(); }
};

/// Warm-start state carried along a lambda path. Only the coefficients
/// seed the next fit; sigma reports the last fitted noise covariance.
struct LassoState {
  Vector alpha;
  Matrix sigma;
};

LassoFit lasso_ss(const MultiSeries& series, int order, double lambda, const LassoOptions& options = {});
LassoFit lasso_ll(const MultiSeries& series, int order, double lambda, const LassoOptions& options = {});

/// Fits from moments of centered data. `state` (if given) warm-starts the
/// fit and receives the solution.
LassoFit fit_lasso(const LagMoments& moments, const Vector& mean, LossKind loss, double lambda,
                   const LassoOptions& options, LassoState* state = nullptr);

/// lambda_max for moments: 2 max|b| for SS, and for LL the same at the
/// covariance of the all-zero model.
double lambda_max(const LagMoments& moments, LossKind loss);

/// Value of the LL target for given coefficients and covariance.
double ll_objective(const LagMoments& moments, const Vector& alpha, const Matrix& sigma, double lambda);

struct CvPlan {
  int folds = 10;
  int n_lambda = 50;
  double lambda_min_ratio = 1e-3;
  std::vector<int> p_range{0, 1, 2, 3};
  /// Explicit decreasing grid used for every order; otherwise log-spaced
  /// from lambda_max(p) down to lambda_min_ratio * lambda_max(p).
  std::optional<std::vector<double>> lambda_grid;
};

/// Contiguous blocks over the n response rows; fold sizes differ by at most one.
std::vector<std::pair<int, int>> block_folds(int rows, int folds);

std::vector<double> lambda_path(double lambda_max, int count, double min_ratio);

struct CvRow {
  int p = 0;
  double lambda = 0.0;
  int fold = 0;
  double error = 0.0;
};

struct CvSummary {
  int p = 0;
  double lambda_opt = 0.0;
  double cv_min = 0.0;
};

struct CvResult {
  int p_star = 0;
  double lambda_star = 0.0;
  std::vector<CvRow> table;
  std::vector<CvSummary> per_order;
  LassoFit fit;
};

/// Blocked k-fold choice of (p, lambda) by held-out one-step squared
/// prediction error, followed by a full-sample fit at the chosen pair.
CvResult cross_validate(const MultiSeries& series, const CvPlan& plan, LossKind loss,
                        const LassoOptions& options = {});

}  // namespace svar
