#include "svar/estimation.hpp"

#include <cmath>
#include <numbers>

namespace svar {

StackedDesign stacked_design(const Matrix& data, int order, int presample) {
  const int t_len = static_cast<int>(data.rows());
  const int k = static_cast<int>(data.cols());
  if (order < 0 || presample < order) {
    throw InvalidInput("presample must be at least the VAR order");
  }
  const int n = t_len - presample;
  if (n <= 0) {
    throw InvalidInput("series too short for the requested order");
  }
  StackedDesign d;
  d.order = order;
  d.presample = presample;
  d.responses = data.middleRows(presample, n).transpose();
  d.lags.resize(static_cast<Eigen::Index>(k) * order, n);
  for (int lag = 1; lag <= order; ++lag) {
    d.lags.middleRows((lag - 1) * k, k) = data.middleRows(presample - lag, n).transpose();
  }
  return d;
}

LagMoments LagMoments::from(const StackedDesign& d) {
  LagMoments m;
  m.order = d.order;
  m.dim = static_cast<int>(d.responses.rows());
  m.rows = static_cast<int>(d.responses.cols());
  m.presample = d.presample;
  m.lag_gram = d.lags * d.lags.transpose();
  m.cross = d.responses * d.lags.transpose();
  m.resp_gram = d.responses * d.responses.transpose();
  return m;
}

LagMoments LagMoments::truncated(int new_order) const {
  if (new_order < 0 || new_order > order) {
    throw InvalidInput("truncated order out of range");
  }
  LagMoments m;
  m.order = new_order;
  m.dim = dim;
  m.rows = rows;
  m.presample = presample;
  const int kp = dim * new_order;
  m.lag_gram = lag_gram.topLeftCorner(kp, kp);
  m.cross = cross.leftCols(kp);
  m.resp_gram = resp_gram;
  return m;
}

Matrix LagMoments::residual_gram(const Matrix& a) const {
  if (order == 0) return resp_gram;
  const Matrix ac = a * cross.transpose();
  Matrix s = resp_gram - ac - ac.transpose() + a * lag_gram * a.transpose();
  return 0.5 * (s + s.transpose());
}

Matrix stack_coeffs(const std::vector<Matrix>& coeffs, int dim) {
  Matrix out(dim, dim * static_cast<int>(coeffs.size()));
  for (std::size_t k = 0; k < coeffs.size(); ++k) {
    out.middleCols(static_cast<Eigen::Index>(k) * dim, dim) = coeffs[k];
  }
  return out;
}

std::vector<Matrix> unstack_coeffs(const Matrix& stacked, int order) {
  const int dim = static_cast<int>(stacked.rows());
  std::vector<Matrix> out;
  out.reserve(order);
  for (int k = 0; k < order; ++k) {
    out.emplace_back(stacked.middleCols(static_cast<Eigen::Index>(k) * dim, dim));
  }
  return out;
}

Matrix least_squares_coeffs(const LagMoments& m) {
  if (m.order == 0) return Matrix(m.dim, 0);
  Eigen::LLT<Matrix> llt(m.lag_gram);
  if (llt.info() != Eigen::Success) {
    throw EstimationError("lagged regressor Gram matrix is singular");
  }
  return llt.solve(m.cross.transpose()).transpose();
}

namespace {

double neg2_loglik_at_mle(const Matrix& sigma, int n, int k) {
  return n * (k * std::log(2.0 * std::numbers::pi) + log_det_spd(sigma) + k);
}

Matrix spd_inverse(const Matrix& s) {
  Eigen::LLT<Matrix> llt(s);
  if (llt.info() != Eigen::Success) {
    throw EstimationError("residual covariance is not positive definite");
  }
  return llt.solve(Matrix::Identity(s.rows(), s.cols()));
}

}  // namespace

ConstrainedFit constrained_mle(const LagMoments& mom, const SparsityPattern& pattern, const Vector& mean,
                               const MleOptions& options) {
  const int k = mom.dim;
  const int p = mom.order;
  const int n = mom.rows;
  if (pattern.order() != p || pattern.dim() != k) {
    throw InvalidInput("pattern shape does not match the design");
  }
  if (n <= 0) {
    throw InvalidInput("no observations to fit");
  }
  const int m = pattern.size();
  const auto& entries = pattern.entries();
  std::vector<int> lag_col(m);
  std::vector<int> row(m);
  for (int a = 0; a < m; ++a) {
    lag_col[a] = (entries[a].lag - 1) * k + entries[a].col;
    row[a] = entries[a].row;
  }

  ConstrainedFit fit;
  fit.pattern = pattern;
  fit.rows = n;
  fit.presample = mom.presample;

  Matrix stacked = Matrix::Zero(k, k * p);
  Vector gamma = Vector::Zero(m);
  Matrix weight = Matrix::Identity(k, k);  // Sigma^{-1}
  Matrix sigma;
  Matrix h(m, m);
  Vector rhs(m);

  auto build_normal_equations = [&](const Matrix& w) {
    const Matrix wc = w * mom.cross;
    for (int a = 0; a < m; ++a) {
      rhs(a) = wc(row[a], lag_col[a]);
      for (int b = 0; b <= a; ++b) {
        const double v = mom.lag_gram(lag_col[a], lag_col[b]) * w(row[a], row[b]);
        h(a, b) = v;
        h(b, a) = v;
      }
    }
  };

  if (m == 0) {
    sigma = mom.resp_gram / n;
    fit.neg2_loglik_trace.push_back(neg2_loglik_at_mle(sigma, n, k));
    fit.iterations = 1;
    fit.converged = true;
  } else {
    for (int iter = 1; iter <= options.max_iter; ++iter) {
      build_normal_equations(weight);
      Eigen::LLT<Matrix> llt(h);
      if (llt.info() != Eigen::Success) {
        throw EstimationError("constrained normal equations are rank deficient");
      }
      Vector next = llt.solve(rhs);
      if (!next.allFinite()) {
        throw EstimationError("constrained estimate is not finite");
      }
      const double change = (next - gamma).cwiseAbs().maxCoeff();
      gamma = std::move(next);
      stacked.setZero();
      for (int a = 0; a < m; ++a) stacked(row[a], lag_col[a]) = gamma(a);
      sigma = mom.residual_gram(stacked) / n;
      fit.neg2_loglik_trace.push_back(neg2_loglik_at_mle(sigma, n, k));
      weight = spd_inverse(sigma);
      fit.iterations = iter;
      if (iter > 1 && change < options.tol) {
        fit.converged = true;
        break;
      }
    }
    build_normal_equations(weight);
    Eigen::LLT<Matrix> llt(h);
    if (llt.info() != Eigen::Success) {
      throw EstimationError("information matrix is singular");
    }
    fit.asymp_cov = llt.solve(Matrix::Identity(m, m));
  }
  if (m == 0) fit.asymp_cov = Matrix(0, 0);

  fit.gamma = gamma;
  fit.loglik = -0.5 * fit.neg2_loglik_trace.back();
  fit.model = VarModel(unstack_coeffs(stacked, p), sigma, mean);
  return fit;
}

ConstrainedFit constrained_mle(const MultiSeries& series, int order, const SparsityPattern& pattern,
                               const MleOptions& options) {
  check_series(series);
  if (order < 0) {
    throw InvalidInput("order must be non-negative");
  }
  const int presample = options.presample < 0 ? order : options.presample;
  if (series.length() <= presample) {
    throw InvalidInput("series must be longer than the presample");
  }
  Matrix data;
  Vector mean;
  if (options.demean) {
    auto c = center(series);
    data = std::move(c.values);
    mean = std::move(c.means);
  } else {
    data = series.values;
    mean = Vector::Zero(series.dim());
  }
  const auto mom = LagMoments::from(stacked_design(data, order, presample));
  return constrained_mle(mom, pattern, mean, options);
}

std::vector<TStatistic> t_statistics(const ConstrainedFit& fit) {
  const auto& entries = fit.pattern.entries();
  std::vector<TStatistic> out;
  out.reserve(entries.size());
  for (std::size_t a = 0; a < entries.size(); ++a) {
    TStatistic s;
    s.index = entries[a];
    s.estimate = fit.gamma(static_cast<Eigen::Index>(a));
    const double var = fit.asymp_cov(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(a));
    if (!(var > 0.0) || !std::isfinite(var)) {
      throw NumericalError("non-positive coefficient variance");
    }
    s.std_error = std::sqrt(var);
    s.t = s.estimate == 0.0 ? 0.0 : s.estimate / s.std_error;
    out.push_back(s);
  }
  return out;
}

}  // namespace svar
