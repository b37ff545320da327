#pragma once

#include "svar/estimation.hpp"
#include "svar/spectral.hpp"

#include <optional>
#include <string>
#include <vector>

namespace svar {

struct SpectralConfig {
  /// Modified Daniell spans; empty selects default_spans(T).
  std::vector<int> spans;
};

struct TwoStageConfig {
  std::vector<int> p_range{0, 1, 2, 3};
  /// Numbers of top-ranked pairs to try; unset selects default_m_range(K).
  std::optional<std::vector<int>> m_range;
  SpectralConfig spectral;
  MleOptions mle;
};

/// {0..K(K-1)/2} for K <= 20, otherwise capped at 10K pairs.
std::vector<int> default_m_range(int dim);

/// Series pairs ranked by sup_w |PSC_ij(w)|^2, highest first; ties broken
/// by (i, j) ascending.
struct PairRanking {
  struct Entry {
    int i = 0;
    int j = 0;
    double stat = 0.0;
  };
  std::vector<Entry> pairs;
};

struct Stage1RankResult {
  PairRanking ranking;
  PscEstimate psc;
};

/// Smoothed periodogram -> inverse-spectrum PSC -> ranking of all pairs.
Stage1RankResult stage1_rank(const MultiSeries& series, const SpectralConfig& config = {});

/// Ranks precomputed pair statistics (summary matrix, symmetric).
PairRanking rank_pairs(const Matrix& summary);

/// Own-lag coefficients at every lag plus both directions of the top
/// `top_pairs` pairs at every lag.
SparsityPattern group_pattern(int order, int dim, const PairRanking& ranking, int top_pairs);

struct BicPoint {
  int p = 0;
  int m_pairs = 0;
  double bic = 0.0;
  double loglik = 0.0;
  bool feasible = true;
};

struct Stage1Result {
  int p = 0;
  int m_pairs = 0;
  ConstrainedFit fit;
  std::vector<BicPoint> surface;
  std::vector<std::string> warnings;
};

/// Constrained fits over p_range x m_range with BIC(p, M) =
/// -2 log L + log T (K + 2M) p, all conditioned on max(p_range) presample
/// observations. Returns the minimizer (ties: smaller p, then smaller M).
Stage1Result stage1_select(const MultiSeries& series, const PairRanking& ranking, const TwoStageConfig& config);

/// Coefficients ranked by |t|, highest first; ties by (lag, row, col).
struct CoeffRanking {
  std::vector<TStatistic> entries;
};

CoeffRanking rank_coefficients(const std::vector<TStatistic>& tstats);

struct Stage2Point {
  int m = 0;
  double bic = 0.0;
  double loglik = 0.0;
};

struct Stage2Result {
  int m_star = 0;
  int p_star = 0;
  ConstrainedFit fit;
  CoeffRanking ranking;
  std::vector<Stage2Point> curve;
};

/// Refits the top-m coefficients of the t-ranking for m = 0..|pattern| and
/// keeps the BIC(m) = -2 log L + log T m minimizer. Uses the presample of
/// the stage-one fit.
Stage2Result stage2_refine(const MultiSeries& series, const ConstrainedFit& stage1_fit, const MleOptions& mle = {});

struct FitReport {
  TwoStageConfig config;
  int length = 0;
  int dim = 0;
  std::optional<Stage1RankResult> rank;  // absent for K = 1 and oracle fits
  Stage1Result stage1;
  Stage2Result stage2;
  VarModel final_model;   // trailing empty lags trimmed
  double final_bic = 0.0;
  double seconds_stage1 = 0.0;
  double seconds_stage2 = 0.0;
  std::vector<std::string> warnings;
  std::string likelihood = "conditional";
};

/// Rank -> select -> refine.
FitReport fit_svar(const MultiSeries& series, const TwoStageConfig& config = {});

/// Stage two applied to a constrained fit on a known support, with the
/// same presample convention as fit_svar.
FitReport oracle_two_stage(const MultiSeries& series, const SparsityPattern& true_pattern,
                           const TwoStageConfig& config = {});

}  // namespace svar
