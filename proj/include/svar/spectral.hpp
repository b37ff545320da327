#pragma once

#include "svar/common.hpp"
#include "svar/var_model.hpp"

#include <complex>
#include <string>
#include <vector>

namespace svar {

enum class SpectrumSource { nonparametric, model_implied };

/// Spectral density matrices on a frequency grid. Estimates built from data
/// hold the full circular Fourier grid 2*pi*k/T, k = 1..T, so that kernel
/// smoothing can wrap around; `half_grid()` keeps k = 1..floor(T/2).
struct SpectralDensityEstimate {
  std::vector<double> frequencies;
  std::vector<CMatrix> matrices;
  SpectrumSource source = SpectrumSource::nonparametric;
  std::vector<std::string> warnings;

  [[nodiscard]] int size() const { return static_cast<int>(frequencies.size()); }
  [[nodiscard]] int dim() const { return matrices.empty() ? 0 : static_cast<int>(matrices.front().rows()); }

  /// Restricts a full Fourier grid of length T to its first floor(T/2) ordinates.
  [[nodiscard]] SpectralDensityEstimate half_grid() const;
};

struct PscEstimate {
  std::vector<double> frequencies;
  std::vector<CMatrix> psc;  // zero diagonal, PSC_ji = conj(PSC_ij)
  Matrix summary;            // sup over the grid of |PSC_ij|^2, zero diagonal
  /// Set for K = 2, where no conditioning set exists and the values are the
  /// ordinary coherency.
  bool ordinary_coherence = false;
  std::vector<std::string> warnings;
};

/// Fourier frequencies 2*pi*k/T for k = 1..floor(T/2).
std::vector<double> fourier_half_grid(int length);

/// Raw cross-periodogram (2*pi*T)^{-1} d d^H of the centered data on the
/// full grid k = 1..T.
SpectralDensityEstimate periodogram(const MultiSeries& series);

/// Modified Daniell weights for an odd span: flat with half-weight ends,
/// normalized to sum to one.
std::vector<double> modified_daniell_weights(int span);

/// Circular convolution of the ordinates with one modified Daniell kernel
/// per span.
SpectralDensityEstimate smooth_daniell(const SpectralDensityEstimate& raw, const std::vector<int>& spans);

/// Default spans {s, s}, s the odd integer nearest sqrt(T).
std::vector<int> default_spans(int length);

/// Smoothed periodogram on the half Fourier grid.
SpectralDensityEstimate estimate_spectrum(const MultiSeries& series, const std::vector<int>& spans);

/// (2 pi)^{-1} A(e^{-iw})^{-1} Sigma A(e^{-iw})^{-H}, A(z) = I - sum A_k z^k.
SpectralDensityEstimate model_spectrum(const VarModel& model, const std::vector<double>& frequencies);

/// PSC through the inverse spectral matrix g = f^{-1}:
/// PSC_ij = -g_ij / sqrt(g_ii g_jj). Near-singular f gets a small ridge.
PscEstimate psc_from_inverse(const SpectralDensityEstimate& f);

/// PSC of one pair by partialling out the remaining K-2 series from the
/// spectrum and scaling the residual cross-spectrum. Independent of
/// psc_from_inverse; used as its check. K = 2 returns ordinary coherency.
std::vector<std::complex<double>> psc_from_residual_filter(const SpectralDensityEstimate& f, int i, int j);

/// Hermitian within herm_tol and smallest eigenvalue >= -psd_tol * ||f||.
bool is_hermitian_psd(const CMatrix& f, double herm_tol = 1e-10, double psd_tol = 1e-8);

}  // namespace svar
