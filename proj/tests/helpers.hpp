#pragma once

#include "svar/common.hpp"
#include "svar/spectral.hpp"

#include <complex>
#include <random>

namespace testing {

inline svar::CMatrix random_hpd(int k, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  svar::CMatrix b(k, k);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) b(i, j) = {n(rng), n(rng)};
  }
  svar::CMatrix out = b * b.adjoint();
  out.diagonal().array() += 0.1;
  return out;
}

inline svar::Matrix random_spd(int k, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  svar::Matrix b(k, k);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) b(i, j) = n(rng);
  }
  svar::Matrix out = b * b.transpose();
  out.diagonal().array() += 0.5;
  return out;
}

inline svar::SpectralDensityEstimate constant_spectrum(const svar::CMatrix& f, int count) {
  svar::SpectralDensityEstimate est;
  for (int k = 0; k < count; ++k) {
    est.frequencies.push_back(2.0 * 3.141592653589793 * (k + 1) / (2 * count));
    est.matrices.push_back(f);
  }
  return est;
}

inline svar::MultiSeries white_noise(int length, int dim, std::uint64_t seed, double sd = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, sd);
  svar::Matrix m(length, dim);
  for (int t = 0; t < length; ++t) {
    for (int i = 0; i < dim; ++i) m(t, i) = n(rng);
  }
  return svar::MultiSeries(m);
}

}  // namespace testing
