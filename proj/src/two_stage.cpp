#include "svar/two_stage.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace svar {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct PreparedData {
  Matrix values;
  Vector mean;
};

PreparedData prepare(const MultiSeries& series, bool demean) {
  check_series(series);
  if (demean) {
    auto c = center(series);
    return {std::move(c.values), std::move(c.means)};
  }
  return {series.values, Vector::Zero(series.dim())};
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

std::vector<int> default_m_range(int dim) {
  const int pairs = dim * (dim - 1) / 2;
  const int top = dim <= 20 ? pairs : std::min(pairs, 10 * dim);
  std::vector<int> out;
  for (int m = 0; m <= top; ++m) out.push_back(m);
  return out;
}

PairRanking rank_pairs(const Matrix& summary) {
  const int k = static_cast<int>(summary.rows());
  PairRanking r;
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      const double s = summary(i, j);
      if (!std::isfinite(s) || s < 0.0) {
        throw NumericalError("pair statistic is not a finite non-negative number");
      }
      r.pairs.push_back({i, j, s});
    }
  }
  std::stable_sort(r.pairs.begin(), r.pairs.end(), [](const PairRanking::Entry& a, const PairRanking::Entry& b) {
    if (a.stat != b.stat) return a.stat > b.stat;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
  });
  return r;
}

Stage1RankResult stage1_rank(const MultiSeries& series, const SpectralConfig& config) {
  check_series(series);
  if (series.dim() < 2) {
    throw InvalidInput("pair ranking needs at least two series");
  }
  const auto f = estimate_spectrum(series, config.spans);
  Stage1RankResult out;
  out.psc = psc_from_inverse(f);
  out.ranking = rank_pairs(out.psc.summary);
  return out;
}

SparsityPattern group_pattern(int order, int dim, const PairRanking& ranking, int top_pairs) {
  if (top_pairs < 0 || top_pairs > static_cast<int>(ranking.pairs.size())) {
    throw InvalidInput("number of selected pairs out of range");
  }
  SparsityPattern pattern(order, dim);
  for (int lag = 1; lag <= order; ++lag) {
    for (int i = 0; i < dim; ++i) pattern.insert({lag, i, i});
    for (int q = 0; q < top_pairs; ++q) {
      const auto& pr = ranking.pairs[q];
      pattern.insert({lag, pr.i, pr.j});
      pattern.insert({lag, pr.j, pr.i});
    }
  }
  return pattern;
}

Stage1Result stage1_select(const MultiSeries& series, const PairRanking& ranking, const TwoStageConfig& config) {
  check_series(series);
  const int k = series.dim();
  const int t_len = series.length();
  if (config.p_range.empty()) {
    throw InvalidInput("order range is empty");
  }
  std::vector<int> p_range = config.p_range;
  std::sort(p_range.begin(), p_range.end());
  p_range.erase(std::unique(p_range.begin(), p_range.end()), p_range.end());
  if (p_range.front() < 0) {
    throw InvalidInput("orders must be non-negative");
  }
  const int npairs = static_cast<int>(ranking.pairs.size());
  if (npairs != k * (k - 1) / 2) {
    throw InvalidInput("pair ranking does not match the series dimension");
  }
  std::vector<int> m_range = config.m_range ? *config.m_range : default_m_range(k);
  std::sort(m_range.begin(), m_range.end());
  m_range.erase(std::unique(m_range.begin(), m_range.end()), m_range.end());
  if (m_range.empty() || m_range.front() < 0 || m_range.back() > npairs) {
    throw InvalidInput("pair-count range must lie within 0..K(K-1)/2");
  }
  const int p_max = p_range.back();
  if (t_len <= p_max + 1) {
    throw InvalidInput("series too short for the largest order");
  }

  const auto data = prepare(series, config.mle.demean);
  const auto full = LagMoments::from(stacked_design(data.values, p_max, p_max));
  const double log_t = std::log(static_cast<double>(t_len));

  Stage1Result out;
  double best = kInf;
  std::optional<ConstrainedFit> best_fit;
  for (int p : p_range) {
    const auto mom = full.truncated(p);
    std::optional<ConstrainedFit> p0_fit;
    for (int m_pairs : m_range) {
      BicPoint pt{p, m_pairs, kInf, -kInf, false};
      try {
        ConstrainedFit fit;
        if (p == 0) {
          if (!p0_fit) p0_fit = constrained_mle(mom, SparsityPattern(0, k), data.mean, config.mle);
          fit = *p0_fit;
        } else {
          fit = constrained_mle(mom, group_pattern(p, k, ranking, m_pairs), data.mean, config.mle);
          if (!fit.converged) {
            out.warnings.push_back("stage 1 fit did not converge at p=" + std::to_string(p) +
                                   ", M=" + std::to_string(m_pairs));
          }
        }
        pt.loglik = fit.loglik;
        pt.bic = -2.0 * fit.loglik + log_t * (k + 2.0 * m_pairs) * p;
        pt.feasible = std::isfinite(pt.bic);
        if (pt.feasible && pt.bic < best) {
          best = pt.bic;
          out.p = p;
          out.m_pairs = p == 0 ? 0 : m_pairs;
          best_fit = std::move(fit);
        }
      } catch (const NumericalError& e) {
        out.warnings.push_back("stage 1 infeasible at p=" + std::to_string(p) + ", M=" + std::to_string(m_pairs) +
                               ": " + e.what());
      }
      out.surface.push_back(pt);
    }
  }
  if (!best_fit) {
    throw EstimationError("no feasible stage 1 model");
  }
  out.fit = std::move(*best_fit);
  return out;
}

CoeffRanking rank_coefficients(const std::vector<TStatistic>& tstats) {
  CoeffRanking r{tstats};
  std::stable_sort(r.entries.begin(), r.entries.end(), [](const TStatistic& a, const TStatistic& b) {
    const double ta = std::abs(a.t);
    const double tb = std::abs(b.t);
    if (ta != tb) return ta > tb;
    if (a.index.lag != b.index.lag) return a.index.lag < b.index.lag;
    if (a.index.row != b.index.row) return a.index.row < b.index.row;
    return a.index.col < b.index.col;
  });
  return r;
}

Stage2Result stage2_refine(const MultiSeries& series, const ConstrainedFit& stage1_fit, const MleOptions& mle) {
  check_series(series);
  const int k = series.dim();
  const int p = stage1_fit.pattern.order();
  const int t_len = series.length();
  const double log_t = std::log(static_cast<double>(t_len));

  const auto data = prepare(series, mle.demean);
  const auto mom = LagMoments::from(stacked_design(data.values, p, std::max(p, stage1_fit.presample)));

  Stage2Result out;
  out.ranking = rank_coefficients(t_statistics(stage1_fit));
  const int total = static_cast<int>(out.ranking.entries.size());

  double best = kInf;
  std::optional<ConstrainedFit> best_fit;
  for (int m = 0; m <= total; ++m) {
    SparsityPattern pattern(p, k);
    for (int q = 0; q < m; ++q) pattern.insert(out.ranking.entries[q].index);
    Stage2Point pt{m, kInf, -kInf};
    try {
      auto fit = constrained_mle(mom, pattern, data.mean, mle);
      pt.loglik = fit.loglik;
      pt.bic = -2.0 * fit.loglik + log_t * m;
      if (std::isfinite(pt.bic) && pt.bic < best) {
        best = pt.bic;
        out.m_star = m;
        best_fit = std::move(fit);
      }
    } catch (const NumericalError&) {
      // left at +inf
    }
    out.curve.push_back(pt);
  }
  if (!best_fit) {
    throw EstimationError("no feasible stage 2 model");
  }
  out.fit = std::move(*best_fit);
  out.p_star = 0;
  for (const auto& c : out.fit.pattern.entries()) out.p_star = std::max(out.p_star, c.lag);
  return out;
}

namespace {

void finish_report(FitReport& report) {
  report.final_model = report.stage2.fit.model.trimmed();
  report.final_bic = report.stage2.curve[report.stage2.m_star].bic;
  for (const auto& w : report.stage1.warnings) report.warnings.push_back(w);
}

}  // namespace

FitReport fit_svar(const MultiSeries& series, const TwoStageConfig& config) {
  check_series(series);
  const int k = series.dim();
  FitReport report;
  report.config = config;
  report.length = series.length();
  report.dim = k;

  const auto start1 = std::chrono::steady_clock::now();
  PairRanking ranking;
  TwoStageConfig cfg = config;
  if (k >= 2) {
    report.rank = stage1_rank(series, config.spectral);
    ranking = report.rank->ranking;
    for (const auto& w : report.rank->psc.warnings) report.warnings.push_back(w);
    if (report.rank->psc.ordinary_coherence) {
      report.warnings.push_back("two series: pair statistic is the ordinary squared coherence");
    }
  } else {
    cfg.m_range = std::vector<int>{0};
  }
  report.stage1 = stage1_select(series, ranking, cfg);
  report.seconds_stage1 = seconds_since(start1);

  const auto start2 = std::chrono::steady_clock::now();
  report.stage2 = stage2_refine(series, report.stage1.fit, config.mle);
  report.seconds_stage2 = seconds_since(start2);
  finish_report(report);
  return report;
}

FitReport oracle_two_stage(const MultiSeries& series, const SparsityPattern& true_pattern,
                           const TwoStageConfig& config) {
  check_series(series);
  if (true_pattern.dim() != series.dim()) {
    throw InvalidInput("oracle pattern dimension does not match the series");
  }
  FitReport report;
  report.config = config;
  report.length = series.length();
  report.dim = series.dim();

  int presample = true_pattern.order();
  for (int p : config.p_range) presample = std::max(presample, p);

  const auto start1 = std::chrono::steady_clock::now();
  MleOptions mle = config.mle;
  mle.presample = presample;
  report.stage1.fit = constrained_mle(series, true_pattern.order(), true_pattern, mle);
  report.stage1.p = true_pattern.order();
  report.stage1.m_pairs = -1;
  report.seconds_stage1 = seconds_since(start1);

  const auto start2 = std::chrono::steady_clock::now();
  report.stage2 = stage2_refine(series, report.stage1.fit, config.mle);
  report.seconds_stage2 = seconds_since(start2);
  finish_report(report);
  return report;
}

}  // namespace svar
