#pragma once

#include "svar/lasso.hpp"
#include "svar/two_stage.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace svar {

enum class Method { two_stage, lasso_ss, lasso_ll, oracle_two_stage };

std::string to_string(Method method);
/// Accepts the names produced by to_string; throws InvalidInput otherwise.
Method parse_method(const std::string& name);

struct StudyConfig {
  VarModel generator;
  double delta2 = 1.0;  // label carried into the metrics table
  int length = 100;
  int replications = 500;
  std::uint64_t seed = 1;
  int burn_in = 500;
  std::vector<Method> methods{Method::two_stage};
  TwoStageConfig two_stage;
  CvPlan cv;
  LassoOptions lasso;
  /// Support handed to the oracle method; defaults to the generator's support.
  std::optional<SparsityPattern> oracle_pattern;
  int threads = 1;
};

/// Seed of replication `rep`: splitmix64(master ^ rep).
std::uint64_t replication_seed(std::uint64_t master, int rep);

struct RepRecord {
  int replication = 0;
  std::uint64_t seed = 0;
  Method method = Method::two_stage;
  bool ok = false;
  std::string error;
  int p_hat = 0;
  int m_hat = 0;
  std::optional<double> bic;     // two-stage methods
  std::optional<double> lambda;  // lasso methods
  std::vector<Matrix> coeffs;    // fitted A_1..A_p_hat
};

struct MetricsRow {
  Method method = Method::two_stage;
  double delta2 = 0.0;
  double p_hat = 0.0;
  double m_hat = 0.0;
  double bias2 = 0.0;
  double variance = 0.0;
  double mse = 0.0;
  int n_ok = 0;
  int n_failed = 0;
  /// More than 1% of replications failed.
  bool flagged = false;
};

struct MetricsTable {
  std::vector<MetricsRow> rows;        // one per method, in config order
  std::vector<RepRecord> records;      // replication-major, then method
};

/// Fits one method to one series.
RepRecord fit_method(const StudyConfig& config, Method method, const MultiSeries& series);

/// Summary over the successful records of one method. Coefficients are
/// compared lag by lag up to the larger of the true and fitted orders, with
/// missing lags counted as zero; variance uses divisor R so that
/// mse = bias2 + variance.
MetricsRow summarize(Method method, double delta2, const VarModel& truth, const std::vector<RepRecord>& records);

/// Simulate, fit every method, summarize. Replications run on `threads`
/// workers; results do not depend on the worker count.
MetricsTable run_study(const StudyConfig& config);

/// Study of the six-series sparse VAR(1) for a named preset
/// "table1-delta{1,4,25,100}" with the three compared methods.
StudyConfig table1_preset(const std::string& name);
std::vector<std::string> preset_names();

/// Root mean squared h-step error over the forecast origins T..T+T_test-h,
/// where T is the last row of `history` and the targets are rows of `test`.
/// Origins with fewer than p available observations are skipped.
double forecast_rmse(const VarModel& model, const MultiSeries& history, const MultiSeries& test, int horizon);

/// Mean negative log density of test rows 1..T_test-1 under the one-step
/// Gaussian predictive N(forecast, Sigma_Z) built from everything before
/// them. Rows with fewer than p preceding observations are skipped.
double log_score(const VarModel& model, const MultiSeries& history, const MultiSeries& test);

/// Two-sided p-value of the Wilcoxon rank-sum test (normal approximation
/// with tie correction).
double rank_sum_test(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace svar
