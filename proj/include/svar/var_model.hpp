#pragma once

#include "svar/common.hpp"

#include <cstdint>
#include <vector>

namespace svar {

/// Gaussian VAR(p) in mean-deviation form:
///   Y_t - mean = sum_k A_k (Y_{t-k} - mean) + Z_t,  Z_t ~ N(0, noise_cov).
struct VarModel {
  std::vector<Matrix> coeffs;  // A_1..A_p, each K x K
  Matrix noise_cov;
  Vector mean;

  VarModel() = default;
  VarModel(std::vector<Matrix> a, Matrix sigma);
  VarModel(std::vector<Matrix> a, Matrix sigma, Vector mu);

  [[nodiscard]] int order() const { return static_cast<int>(coeffs.size()); }
  [[nodiscard]] int dim() const { return static_cast<int>(noise_cov.rows()); }

  /// Throws InvalidInput on inconsistent shapes or non-finite entries and
  /// DomainError if noise_cov is not symmetric positive definite.
  void validate() const;

  /// Number of exactly non-zero AR coefficients.
  [[nodiscard]] int nonzero_count() const;

  /// Copy with trailing all-zero lag matrices removed.
  [[nodiscard]] VarModel trimmed() const;
};

/// One AR coefficient A_lag(row, col); lag is 1-based, row/col 0-based.
struct CoeffIndex {
  int lag = 1;
  int row = 0;
  int col = 0;

  friend bool operator==(const CoeffIndex&, const CoeffIndex&) = default;
};

/// Position of A_lag(row, col) in alpha = vec(A_1, ..., A_p).
inline int alpha_position(const CoeffIndex& c, int dim) {
  return (c.lag - 1) * dim * dim + c.col * dim + c.row;
}

/// The set of AR coefficients allowed to be non-zero. Entries are kept
/// sorted by their position in vec(A_1..A_p), so the induced selection
/// matrix R has columns in canonical order.
class SparsityPattern {
 public:
  SparsityPattern(int order, int dim);
  SparsityPattern(int order, int dim, const std::vector<CoeffIndex>& entries);

  static SparsityPattern full(int order, int dim);
  /// Non-zero entries of a model's coefficient matrices.
  static SparsityPattern support_of(const VarModel& model);

  void insert(const CoeffIndex& c);
  [[nodiscard]] bool contains(const CoeffIndex& c) const;
  [[nodiscard]] int size() const { return static_cast<int>(entries_.size()); }
  [[nodiscard]] bool empty() const { return entries_.empty(); }
  [[nodiscard]] int order() const { return order_; }
  [[nodiscard]] int dim() const { return dim_; }
  [[nodiscard]] const std::vector<CoeffIndex>& entries() const { return entries_; }
  /// True if every entry of this pattern is in `other`.
  [[nodiscard]] bool subset_of(const SparsityPattern& other) const;
  /// K^2 p x m selection matrix with one unit entry per column.
  [[nodiscard]] Matrix selection_matrix() const;

 private:
  int order_;
  int dim_;
  std::vector<CoeffIndex> entries_;
};

/// All roots of det(I - sum A_k z^k) outside the unit disk, checked through
/// the companion matrix (spectral radius < 1 - 1e-10).
bool is_causal(const VarModel& model);

/// Spectral radius of the companion matrix (0 for p = 0).
double companion_spectral_radius(const VarModel& model);

/// Gaussian simulation starting from the mean, discarding `burn_in` steps.
MultiSeries simulate(const VarModel& model, int length, std::uint64_t seed, int burn_in = 500);

/// Conditional Gaussian log-likelihood of Y_{presample+1..T} given the
/// first `presample` observations (presample < 0 means model.order()).
double log_likelihood(const VarModel& model, const MultiSeries& series, int presample = -1);

struct Forecast {
  Matrix point;                 // h x K
  std::vector<Matrix> mse;      // Sigma_1..Sigma_h
};

/// Moving-average weights Psi_0..Psi_{count-1}.
std::vector<Matrix> ma_weights(const VarModel& model, int count);

/// Iterated linear predictor from the end of `history`.
Forecast forecast(const VarModel& model, const MultiSeries& history, int horizon);

namespace reference {

/// Six-dimensional sparse VAR(1) with six non-zero coefficients; the noise
/// covariance couples series 1 to every other series with scale delta.
VarModel six_series_var1(double delta2);

/// Three-dimensional VAR(1) whose partial spectral coherence between
/// series 1 and 2 vanishes although A_1(1,2) = 0.5.
VarModel zero_psc_var1();

}  // namespace reference

}  // namespace svar
