#include "svar/spectral.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace svar {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kRidge = 1e-8;
constexpr double kMinRcond = 1e-12;

}  // namespace

SpectralDensityEstimate SpectralDensityEstimate::half_grid() const {
  SpectralDensityEstimate out;
  out.source = source;
  out.warnings = warnings;
  const int half = size() / 2;
  out.frequencies.assign(frequencies.begin(), frequencies.begin() + half);
  out.matrices.assign(matrices.begin(), matrices.begin() + half);
  return out;
}

std::vector<double> fourier_half_grid(int length) {
  std::vector<double> w;
  for (int k = 1; k <= length / 2; ++k) {
    w.push_back(kTwoPi * k / length);
  }
  return w;
}

SpectralDensityEstimate periodogram(const MultiSeries& series) {
  check_series(series);
  const int t_len = series.length();
  const int k_dim = series.dim();
  if (t_len < 2) {
    throw InvalidInput("periodogram needs at least two observations");
  }
  const CenteredSeries c = center(series);

  Eigen::FFT<double> fft;
  // dft(k, i): transform of series i at frequency index k (0..T-1).
  CMatrix dft(t_len, k_dim);
  for (int i = 0; i < k_dim; ++i) {
    std::vector<double> x(c.values.col(i).data(), c.values.col(i).data() + t_len);
    std::vector<std::complex<double>> out;
    fft.fwd(out, x);
    for (int k = 0; k < t_len; ++k) dft(k, i) = out[k];
  }

  SpectralDensityEstimate est;
  est.source = SpectrumSource::nonparametric;
  est.frequencies.reserve(t_len);
  est.matrices.reserve(t_len);
  const double scale = 1.0 / (kTwoPi * t_len);
  for (int k = 1; k <= t_len; ++k) {
    const Eigen::VectorXcd d = dft.row(k % t_len).transpose();
    CMatrix m = scale * d * d.adjoint();
    // Exact Hermitian symmetry on the diagonal.
    for (int i = 0; i < k_dim; ++i) m(i, i) = m(i, i).real();
    est.frequencies.push_back(kTwoPi * k / t_len);
    est.matrices.push_back(std::move(m));
  }
  return est;
}

std::vector<double> modified_daniell_weights(int span) {
  if (span < 1 || span % 2 == 0) {
    throw InvalidInput("Daniell span must be an odd positive integer");
  }
  if (span == 1) return {1.0};
  const int m = (span - 1) / 2;
  std::vector<double> w(span, 1.0 / (2.0 * m));
  w.front() = w.back() = 1.0 / (4.0 * m);
  return w;
}

SpectralDensityEstimate smooth_daniell(const SpectralDensityEstimate& raw, const std::vector<int>& spans) {
  if (spans.empty()) {
    throw InvalidInput("at least one smoothing span is required");
  }
  const int n = raw.size();
  if (n == 0) {
    throw InvalidInput("spectral estimate is empty");
  }
  for (int s : spans) {
    if (s < 1 || s % 2 == 0) {
      throw InvalidInput("Daniell spans must be odd positive integers");
    }
    if (s >= n) {
      throw InvalidInput("Daniell span must be smaller than the number of frequencies");
    }
  }
  SpectralDensityEstimate cur = raw;
  for (int s : spans) {
    if (s == 1) continue;
    const auto w = modified_daniell_weights(s);
    const int m = (s - 1) / 2;
    std::vector<CMatrix> next(n);
    for (int k = 0; k < n; ++k) {
      CMatrix acc = CMatrix::Zero(cur.matrices[k].rows(), cur.matrices[k].cols());
      for (int l = -m; l <= m; ++l) {
        const int idx = ((k + l) % n + n) % n;
        acc += w[l + m] * cur.matrices[idx];
      }
      next[k] = std::move(acc);
    }
    cur.matrices = std::move(next);
  }
  return cur;
}

std::vector<int> default_spans(int length) {
  const double r = std::sqrt(static_cast<double>(length));
  const int s = 2 * static_cast<int>(std::floor(r / 2.0)) + 1;
  return {s, s};
}

SpectralDensityEstimate estimate_spectrum(const MultiSeries& series, const std::vector<int>& spans) {
  const auto raw = periodogram(series);
  const auto& use = spans.empty() ? default_spans(series.length()) : spans;
  return smooth_daniell(raw, use).half_grid();
}

SpectralDensityEstimate model_spectrum(const VarModel& model, const std::vector<double>& frequencies) {
  model.validate();
  if (!is_causal(model)) {
    throw DomainError("model spectrum requires a causal VAR model");
  }
  const int k_dim = model.dim();
  SpectralDensityEstimate est;
  est.source = SpectrumSource::model_implied;
  est.frequencies = frequencies;
  est.matrices.reserve(frequencies.size());
  const CMatrix sigma = model.noise_cov.cast<std::complex<double>>();
  for (double w : frequencies) {
    CMatrix a = CMatrix::Identity(k_dim, k_dim);
    for (int lag = 1; lag <= model.order(); ++lag) {
      const std::complex<double> z = std::polar(1.0, -w * lag);
      a -= z * model.coeffs[lag - 1].cast<std::complex<double>>();
    }
    const CMatrix psi = a.partialPivLu().inverse();
    CMatrix f = (psi * sigma * psi.adjoint()) / kTwoPi;
    f = 0.5 * (f + f.adjoint()).eval();
    est.matrices.push_back(std::move(f));
  }
  return est;
}

PscEstimate psc_from_inverse(const SpectralDensityEstimate& f) {
  const int k_dim = f.dim();
  if (k_dim < 2) {
    throw InvalidInput("partial spectral coherence needs at least two series");
  }
  PscEstimate out;
  out.frequencies = f.frequencies;
  out.ordinary_coherence = (k_dim == 2);
  out.summary = Matrix::Zero(k_dim, k_dim);
  out.psc.reserve(f.size());
  int ridged = 0;
  for (int idx = 0; idx < f.size(); ++idx) {
    const CMatrix& fm = f.matrices[idx];
    Eigen::LLT<CMatrix> llt(fm);
    CMatrix g;
    if (llt.info() != Eigen::Success || llt.rcond() < kMinRcond) {
      const double tr = fm.trace().real();
      if (!(tr > 0.0) || !std::isfinite(tr)) {
        std::ostringstream msg;
        msg << "singular spectral matrix at frequency " << f.frequencies[idx];
        throw NumericalError(msg.str());
      }
      CMatrix ridged_f = fm;
      ridged_f.diagonal().array() += kRidge * tr / k_dim;
      Eigen::LLT<CMatrix> llt2(ridged_f);
      if (llt2.info() != Eigen::Success) {
        std::ostringstream msg;
        msg << "singular spectral matrix at frequency " << f.frequencies[idx];
        throw NumericalError(msg.str());
      }
      g = llt2.solve(CMatrix::Identity(k_dim, k_dim));
      ++ridged;
    } else {
      g = llt.solve(CMatrix::Identity(k_dim, k_dim));
    }
    CMatrix psc = CMatrix::Zero(k_dim, k_dim);
    for (int i = 0; i < k_dim; ++i) {
      for (int j = i + 1; j < k_dim; ++j) {
        const double denom = std::sqrt(g(i, i).real() * g(j, j).real());
        const std::complex<double> v = -g(i, j) / denom;
        const double mod2 = std::norm(v);
        if (!std::isfinite(mod2) || mod2 > (1.0 + 1e-8) * (1.0 + 1e-8)) {
          std::ostringstream msg;
          msg << "partial coherence out of range at frequency " << f.frequencies[idx];
          throw NumericalError(msg.str());
        }
        psc(i, j) = v;
        psc(j, i) = std::conj(v);
        out.summary(i, j) = std::max(out.summary(i, j), mod2);
      }
    }
    out.psc.push_back(std::move(psc));
  }
  out.summary.triangularView<Eigen::StrictlyLower>() = out.summary.transpose();
  if (ridged > 0) {
    out.warnings.push_back("ridge added to " + std::to_string(ridged) +
                           " near-singular spectral matrices before inversion");
  }
  return out;
}

std::vector<std::complex<double>> psc_from_residual_filter(const SpectralDensityEstimate& f, int i, int j) {
  const int k_dim = f.dim();
  if (k_dim < 2 || i == j || i < 0 || j < 0 || i >= k_dim || j >= k_dim) {
    throw InvalidInput("invalid series pair for partial coherence");
  }
  std::vector<int> rest;
  for (int r = 0; r < k_dim; ++r) {
    if (r != i && r != j) rest.push_back(r);
  }
  const int nr = static_cast<int>(rest.size());
  std::vector<std::complex<double>> out;
  out.reserve(f.size());
  for (int idx = 0; idx < f.size(); ++idx) {
    const CMatrix& fm = f.matrices[idx];
    std::complex<double> eii = fm(i, i);
    std::complex<double> ejj = fm(j, j);
    std::complex<double> eij = fm(i, j);
    if (nr > 0) {
      CMatrix frr(nr, nr);
      CMatrix fr_i(nr, 1);
      CMatrix fr_j(nr, 1);
      for (int a = 0; a < nr; ++a) {
        for (int b = 0; b < nr; ++b) frr(a, b) = fm(rest[a], rest[b]);
        fr_i(a, 0) = fm(rest[a], i);
        fr_j(a, 0) = fm(rest[a], j);
      }
      Eigen::FullPivLU<CMatrix> lu(frr);
      if (!lu.isInvertible()) {
        std::ostringstream msg;
        msg << "singular conditioning block at frequency " << f.frequencies[idx];
        throw NumericalError(msg.str());
      }
      const CMatrix sol_i = lu.solve(fr_i);
      const CMatrix sol_j = lu.solve(fr_j);
      // f_{a,-ij} f_{-ij,-ij}^{-1} f_{-ij,b}, with f_{a,-ij} = f_{-ij,a}^H.
      eii -= (fr_i.adjoint() * sol_i)(0, 0);
      ejj -= (fr_j.adjoint() * sol_j)(0, 0);
      eij -= (fr_i.adjoint() * sol_j)(0, 0);
    }
    out.push_back(eij / std::sqrt(eii.real() * ejj.real()));
  }
  return out;
}

bool is_hermitian_psd(const CMatrix& f, double herm_tol, double psd_tol) {
  if (f.rows() != f.cols()) return false;
  const double scale = std::max(1e-300, f.norm());
  if ((f - f.adjoint()).norm() > herm_tol * std::max(1.0, scale)) return false;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (f + f.adjoint()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -psd_tol * scale;
}

}  // namespace svar
