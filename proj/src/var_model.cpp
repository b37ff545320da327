#include "svar/var_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace svar {

VarModel::VarModel(std::vector<Matrix> a, Matrix sigma)
    : coeffs(std::move(a)), noise_cov(std::move(sigma)), mean(Vector::Zero(noise_cov.rows())) {}

VarModel::VarModel(std::vector<Matrix> a, Matrix sigma, Vector mu)
    : coeffs(std::move(a)), noise_cov(std::move(sigma)), mean(std::move(mu)) {}

void VarModel::validate() const {
  const int k = dim();
  if (k == 0 || noise_cov.cols() != k) {
    throw InvalidInput("noise covariance must be a non-empty square matrix");
  }
  if (mean.size() != k) {
    throw InvalidInput("mean has wrong dimension");
  }
  for (const auto& a : coeffs) {
    if (a.rows() != k || a.cols() != k) {
      throw InvalidInput("coefficient matrix has wrong shape");
    }
    if (!a.allFinite()) {
      throw InvalidInput("coefficient matrix has non-finite entries");
    }
  }
  if (!noise_cov.allFinite() || !mean.allFinite()) {
    throw InvalidInput("model has non-finite entries");
  }
  if (!is_symmetric(noise_cov, 1e-12)) {
    throw DomainError("noise covariance is not symmetric");
  }
  Eigen::LLT<Matrix> llt(noise_cov);
  if (llt.info() != Eigen::Success) {
    throw DomainError("noise covariance is not positive definite");
  }
}

int VarModel::nonzero_count() const {
  int n = 0;
  for (const auto& a : coeffs) {
    n += static_cast<int>((a.array() != 0.0).count());
  }
  return n;
}

VarModel VarModel::trimmed() const {
  VarModel out = *this;
  while (!out.coeffs.empty() && (out.coeffs.back().array() == 0.0).all()) {
    out.coeffs.pop_back();
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

bool position_less(const CoeffIndex& a, const CoeffIndex& b) {
  if (a.lag != b.lag) return a.lag < b.lag;
  if (a.col != b.col) return a.col < b.col;
  return a.row < b.row;
}

}  // namespace

SparsityPattern::SparsityPattern(int order, int dim) : order_(order), dim_(dim) {
  if (order < 0 || dim <= 0) {
    throw InvalidInput("pattern needs order >= 0 and dim > 0");
  }
}

SparsityPattern::SparsityPattern(int order, int dim, const std::vector<CoeffIndex>& entries)
    : SparsityPattern(order, dim) {
  for (const auto& c : entries) {
    if (contains(c)) {
      throw InvalidInput("duplicate pattern entry");
    }
    insert(c);
  }
}

SparsityPattern SparsityPattern::full(int order, int dim) {
  SparsityPattern p(order, dim);
  p.entries_.reserve(static_cast<std::size_t>(order) * dim * dim);
  for (int k = 1; k <= order; ++k) {
    for (int j = 0; j < dim; ++j) {
      for (int i = 0; i < dim; ++i) {
        p.entries_.push_back({k, i, j});
      }
    }
  }
  return p;
}

SparsityPattern SparsityPattern::support_of(const VarModel& model) {
  SparsityPattern p(model.order(), model.dim());
  for (int k = 1; k <= model.order(); ++k) {
    const Matrix& a = model.coeffs[k - 1];
    for (int j = 0; j < model.dim(); ++j) {
      for (int i = 0; i < model.dim(); ++i) {
        if (a(i, j) != 0.0) p.entries_.push_back({k, i, j});
      }
    }
  }
  return p;
}

void SparsityPattern::insert(const CoeffIndex& c) {
  if (c.lag < 1 || c.lag > order_ || c.row < 0 || c.row >= dim_ || c.col < 0 || c.col >= dim_) {
    throw InvalidInput("pattern entry out of range");
  }
  auto it = std::lower_bound(entries_.begin(), entries_.end(), c, position_less);
  if (it != entries_.end() && *it == c) {
    throw InvalidInput("duplicate pattern entry");
  }
  entries_.insert(it, c);
}

bool SparsityPattern::contains(const CoeffIndex& c) const {
  return std::binary_search(entries_.begin(), entries_.end(), c, position_less);
}

bool SparsityPattern::subset_of(const SparsityPattern& other) const {
  return std::all_of(entries_.begin(), entries_.end(),
                     [&](const CoeffIndex& c) { return other.contains(c); });
}

Matrix SparsityPattern::selection_matrix() const {
  Matrix r = Matrix::Zero(static_cast<Eigen::Index>(dim_) * dim_ * order_, size());
  for (int a = 0; a < size(); ++a) {
    r(alpha_position(entries_[a], dim_), a) = 1.0;
  }
  return r;
}

// ---------------------------------------------------------------------------

double companion_spectral_radius(const VarModel& model) {
  const int p = model.order();
  const int k = model.dim();
  if (p == 0) return 0.0;
  Matrix companion = Matrix::Zero(k * p, k * p);
  for (int lag = 0; lag < p; ++lag) {
    companion.block(0, lag * k, k, k) = model.coeffs[lag];
  }
  if (p > 1) {
    companion.block(k, 0, k * (p - 1), k * (p - 1)).setIdentity();
  }
  Eigen::EigenSolver<Matrix> es(companion, false);
  if (es.info() != Eigen::Success) {
    throw NumericalError("companion eigenvalue computation failed");
  }
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

bool is_causal(const VarModel& model) {
  return companion_spectral_radius(model) < 1.0 - 1e-10;
}

MultiSeries simulate(const VarModel& model, int length, std::uint64_t seed, int burn_in) {
  model.validate();
  if (length <= 0) {
    throw InvalidInput("simulation length must be positive");
  }
  if (burn_in < 0) {
    throw InvalidInput("burn-in must be non-negative");
  }
  if (!is_causal(model)) {
    throw DomainError("cannot simulate a non-causal VAR model");
  }
  const int k = model.dim();
  const int p = model.order();
  const Matrix root = sym_sqrt(model.noise_cov);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  const int total = burn_in + length;
  // Deviations from the mean; presample values are zero.
  Matrix dev = Matrix::Zero(total + p, k);
  Vector eps(k);
  for (int t = p; t < total + p; ++t) {
    for (int i = 0; i < k; ++i) eps(i) = normal(rng);
    Vector y = root * eps;
    for (int lag = 1; lag <= p; ++lag) {
      y.noalias() += model.coeffs[lag - 1] * dev.row(t - lag).transpose();
    }
    dev.row(t) = y.transpose();
  }
  Matrix out = dev.bottomRows(length);
  out.rowwise() += model.mean.transpose();
  return MultiSeries(std::move(out));
}

double log_likelihood(const VarModel& model, const MultiSeries& series, int presample) {
  model.validate();
  check_series(series);
  const int k = model.dim();
  const int p = model.order();
  if (series.dim() != k) {
    throw InvalidInput("series dimension does not match model");
  }
  if (presample < 0) presample = p;
  if (presample < p) {
    throw InvalidInput("presample shorter than the model order");
  }
  const int n = series.length() - presample;
  if (n <= 0) {
    throw InvalidInput("series too short for the conditioning presample");
  }
  Eigen::LLT<Matrix> llt(model.noise_cov);
  if (llt.info() != Eigen::Success) {
    throw DomainError("noise covariance is not positive definite");
  }
  const Matrix dev = series.values.rowwise() - model.mean.transpose();
  Matrix resid = dev.bottomRows(n).transpose();  // K x n
  for (int lag = 1; lag <= p; ++lag) {
    resid.noalias() -= model.coeffs[lag - 1] * dev.middleRows(presample - lag, n).transpose();
  }
  const double quad = llt.matrixL().solve(resid).squaredNorm();
  const double logdet = log_det_spd(model.noise_cov);
  return -0.5 * (n * k * std::log(2.0 * std::numbers::pi) + n * logdet + quad);
}

std::vector<Matrix> ma_weights(const VarModel& model, int count) {
  const int k = model.dim();
  std::vector<Matrix> psi;
  psi.reserve(count);
  for (int j = 0; j < count; ++j) {
    if (j == 0) {
      psi.push_back(Matrix::Identity(k, k));
      continue;
    }
    Matrix w = Matrix::Zero(k, k);
    for (int lag = 1; lag <= std::min(j, model.order()); ++lag) {
      w.noalias() += model.coeffs[lag - 1] * psi[j - lag];
    }
    psi.push_back(std::move(w));
  }
  return psi;
}

Forecast forecast(const VarModel& model, const MultiSeries& history, int horizon) {
  model.validate();
  const int k = model.dim();
  const int p = model.order();
  if (horizon < 1) {
    throw InvalidInput("forecast horizon must be >= 1");
  }
  if (history.length() < p) {
    throw InvalidInput("history shorter than the model order");
  }
  if (history.length() > 0 && history.dim() != k) {
    throw InvalidInput("history dimension does not match model");
  }
  // Most recent p deviations followed by the forecast path.
  Matrix path = Matrix::Zero(p + horizon, k);
  for (int lag = 0; lag < p; ++lag) {
    path.row(lag) = history.values.row(history.length() - p + lag) - model.mean.transpose();
  }
  for (int h = 0; h < horizon; ++h) {
    Vector y = Vector::Zero(k);
    for (int lag = 1; lag <= p; ++lag) {
      y.noalias() += model.coeffs[lag - 1] * path.row(p + h - lag).transpose();
    }
    path.row(p + h) = y.transpose();
  }
  Forecast out;
  out.point = path.bottomRows(horizon).rowwise() + model.mean.transpose();
  const auto psi = ma_weights(model, horizon);
  Matrix acc = Matrix::Zero(k, k);
  for (int h = 0; h < horizon; ++h) {
    acc.noalias() += psi[h] * model.noise_cov * psi[h].transpose();
    out.mse.push_back(acc);
  }
  return out;
}

namespace reference {

VarModel six_series_var1(double delta2) {
  if (!(delta2 > 0.0)) {
    throw InvalidInput("delta^2 must be positive");
  }
  Matrix a = Matrix::Zero(6, 6);
  a(0, 0) = 0.8;
  a(1, 3) = 0.3;
  a(2, 4) = -0.3;
  a(3, 0) = 0.6;
  a(4, 2) = 0.6;
  a(5, 5) = 0.8;
  const double d = std::sqrt(delta2);
  Matrix sigma = Matrix::Identity(6, 6);
  sigma(0, 0) = delta2;
  for (int j = 1; j < 6; ++j) {
    sigma(0, j) = sigma(j, 0) = d / (2.0 * (j + 1));
  }
  return VarModel({a}, sigma);
}

VarModel zero_psc_var1() {
  Matrix a(3, 3);
  a << 0.0, 0.5, 0.5,
       0.0, 0.0, 0.3,
       0.0, 0.25, 0.5;
  Matrix sigma(3, 3);
  sigma << 18.0, 0.0, 6.0,
           0.0, 1.0, 0.0,
           6.0, 0.0, 3.0;
  return VarModel({a}, sigma);
}

}  // namespace reference

}  // namespace svar
