#include "svar/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <thread>

namespace svar {

std::string to_string(Method method) {
  switch (method) {
    case Method::two_stage: return "two_stage";
    case Method::lasso_ss: return "lasso_ss";
    case Method::lasso_ll: return "lasso_ll";
    case Method::oracle_two_stage: return "oracle_two_stage";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  for (Method m : {Method::two_stage, Method::lasso_ss, Method::lasso_ll, Method::oracle_two_stage}) {
    if (to_string(m) == name) return m;
  }
  throw InvalidInput("unknown method '" + name + "'");
}

std::uint64_t replication_seed(std::uint64_t master, int rep) {
  return splitmix64(master ^ static_cast<std::uint64_t>(rep));
}

RepRecord fit_method(const StudyConfig& config, Method method, const MultiSeries& series) {
  RepRecord rec;
  rec.method = method;
  try {
    switch (method) {
      case Method::two_stage:
      case Method::oracle_two_stage: {
        FitReport report;
        if (method == Method::two_stage) {
          report = fit_svar(series, config.two_stage);
        } else {
          const auto pattern = config.oracle_pattern ? *config.oracle_pattern
                                                     : SparsityPattern::support_of(config.generator);
          report = oracle_two_stage(series, pattern, config.two_stage);
        }
        rec.p_hat = report.stage2.p_star;
        rec.m_hat = report.stage2.m_star;
        rec.bic = report.final_bic;
        rec.coeffs = report.final_model.coeffs;
        break;
      }
      case Method::lasso_ss:
      case Method::lasso_ll: {
        const auto cv =
            cross_validate(series, config.cv, method == Method::lasso_ss ? LossKind::SS : LossKind::LL, config.lasso);
        rec.p_hat = cv.p_star;
        rec.m_hat = cv.fit.nonzero_count();
        rec.lambda = cv.lambda_star;
        rec.coeffs = cv.fit.model.coeffs;
        break;
      }
    }
    rec.ok = true;
  } catch (const std::exception& e) {
    rec.ok = false;
    rec.error = e.what();
  }
  return rec;
}

MetricsRow summarize(Method method, double delta2, const VarModel& truth, const std::vector<RepRecord>& records) {
  MetricsRow row;
  row.method = method;
  row.delta2 = delta2;
  const int k = truth.dim();
  int max_lag = truth.order();
  std::vector<const RepRecord*> ok;
  for (const auto& r : records) {
    if (r.method != method) continue;
    if (r.ok) {
      ok.push_back(&r);
      max_lag = std::max(max_lag, static_cast<int>(r.coeffs.size()));
    } else {
      ++row.n_failed;
    }
  }
  row.n_ok = static_cast<int>(ok.size());
  const int total = row.n_ok + row.n_failed;
  row.flagged = total > 0 && row.n_failed * 100 > total;
  if (ok.empty()) {
    row.p_hat = row.m_hat = row.bias2 = row.variance = row.mse = std::nan("");
    return row;
  }
  const double reps = static_cast<double>(ok.size());
  auto coef = [k](const std::vector<Matrix>& a, int lag) -> Matrix {
    return lag < static_cast<int>(a.size()) ? a[lag] : Matrix::Zero(k, k);
  };
  for (const auto* r : ok) {
    row.p_hat += r->p_hat / reps;
    row.m_hat += r->m_hat / reps;
  }
  for (int lag = 0; lag < max_lag; ++lag) {
    Matrix mean = Matrix::Zero(k, k);
    for (const auto* r : ok) mean += coef(r->coeffs, lag);
    mean /= reps;
    Matrix var = Matrix::Zero(k, k);
    for (const auto* r : ok) var += (coef(r->coeffs, lag) - mean).cwiseAbs2();
    var /= reps;
    row.bias2 += (mean - coef(truth.coeffs, lag)).squaredNorm();
    row.variance += var.sum();
  }
  row.mse = row.bias2 + row.variance;
  return row;
}

MetricsTable run_study(const StudyConfig& config) {
  if (config.replications < 1) {
    throw InvalidInput("replications must be at least 1");
  }
  if (config.methods.empty()) {
    throw InvalidInput("no methods selected");
  }
  config.generator.validate();
  if (!is_causal(config.generator)) {
    throw DomainError("generator is not causal");
  }
  const int n_methods = static_cast<int>(config.methods.size());
  std::vector<std::vector<RepRecord>> per_rep(config.replications);

  std::atomic<int> next{0};
  auto worker = [&] {
    for (int rep = next++; rep < config.replications; rep = next++) {
      const std::uint64_t seed = replication_seed(config.seed, rep);
      const auto series = simulate(config.generator, config.length, seed, config.burn_in);
      auto& out = per_rep[rep];
      for (Method m : config.methods) {
        auto rec = fit_method(config, m, series);
        rec.replication = rep;
        rec.seed = seed;
        out.push_back(std::move(rec));
      }
    }
  };
  const int threads = std::clamp(config.threads, 1, config.replications);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  MetricsTable table;
  table.records.reserve(static_cast<std::size_t>(config.replications) * n_methods);
  for (auto& recs : per_rep) {
    for (auto& r : recs) table.records.push_back(std::move(r));
  }
  for (Method m : config.methods) {
    table.rows.push_back(summarize(m, config.delta2, config.generator, table.records));
  }
  return table;
}

std::vector<std::string> preset_names() {
  return {"table1-delta1", "table1-delta4", "table1-delta25", "table1-delta100"};
}

StudyConfig table1_preset(const std::string& name) {
  double delta2 = 0.0;
  if (name == "table1-delta1") {
    delta2 = 1.0;
  } else if (name == "table1-delta4") {
    delta2 = 4.0;
  } else if (name == "table1-delta25") {
    delta2 = 25.0;
  } else if (name == "table1-delta100") {
    delta2 = 100.0;
  } else {
    throw InvalidInput("unknown preset '" + name + "'");
  }
  StudyConfig c;
  c.generator = reference::six_series_var1(delta2);
  c.delta2 = delta2;
  c.length = 100;
  c.replications = 500;
  c.seed = 1;
  c.methods = {Method::two_stage, Method::lasso_ll, Method::lasso_ss};
  c.two_stage.p_range = {0, 1, 2, 3};
  c.cv.p_range = {0, 1, 2, 3};
  return c;
}

namespace {

Matrix joined(const VarModel& model, const MultiSeries& history, const MultiSeries& test) {
  model.validate();
  const int k = model.dim();
  if (test.length() == 0 || test.dim() != k) {
    throw InvalidInput("test data must be non-empty with one column per series");
  }
  if (history.length() > 0 && history.dim() != k) {
    throw InvalidInput("history has the wrong number of columns");
  }
  if (!test.values.allFinite() || !history.values.allFinite()) {
    throw InvalidInput("data contain non-finite values");
  }
  Matrix all(history.length() + test.length(), k);
  if (history.length() > 0) all.topRows(history.length()) = history.values;
  all.bottomRows(test.length()) = test.values;
  return all;
}

// Prediction of row `known + h - 1` from rows 0..known-1 (deviation form).
Vector predict(const VarModel& model, const Matrix& data, int known, int h) {
  const int p = model.order();
  const int k = model.dim();
  std::vector<Vector> dev;
  dev.reserve(static_cast<std::size_t>(p + h));
  for (int i = known - p; i < known; ++i) dev.push_back(data.row(i).transpose() - model.mean);
  for (int step = 0; step < h; ++step) {
    Vector next = Vector::Zero(k);
    const int last = static_cast<int>(dev.size()) - 1;
    for (int lag = 1; lag <= p; ++lag) next.noalias() += model.coeffs[lag - 1] * dev[last - lag + 1];
    dev.push_back(std::move(next));
  }
  return dev.back() + model.mean;
}

}  // namespace

double forecast_rmse(const VarModel& model, const MultiSeries& history, const MultiSeries& test, int horizon) {
  if (horizon < 1) {
    throw InvalidInput("horizon must be at least 1");
  }
  if (horizon > test.length()) {
    throw InvalidInput("horizon exceeds the test length");
  }
  const Matrix all = joined(model, history, test);
  const int t0 = history.length();
  const int p = model.order();
  double sum = 0.0;
  int used = 0;
  for (int origin = t0; origin <= t0 + test.length() - horizon; ++origin) {
    if (origin < p) continue;
    const Vector err = predict(model, all, origin, horizon) - all.row(origin + horizon - 1).transpose();
    sum += err.squaredNorm();
    ++used;
  }
  if (used == 0) {
    throw InvalidInput("no forecast origin has enough history");
  }
  return std::sqrt(sum / (static_cast<double>(model.dim()) * used));
}

double log_score(const VarModel& model, const MultiSeries& history, const MultiSeries& test) {
  if (test.length() < 2) {
    throw InvalidInput("log score needs at least two test rows");
  }
  const Matrix all = joined(model, history, test);
  Eigen::LLT<Matrix> llt(model.noise_cov);
  if (llt.info() != Eigen::Success) {
    throw DomainError("noise covariance is not positive definite");
  }
  const int k = model.dim();
  const double norm = 0.5 * (k * std::log(2.0 * std::numbers::pi) + log_det_spd(model.noise_cov));
  const int t0 = history.length();
  const int p = model.order();
  double sum = 0.0;
  int used = 0;
  for (int target = t0; target < t0 + test.length() - 1; ++target) {
    if (target < p) continue;
    const Vector err = all.row(target).transpose() - predict(model, all, target, 1);
    const Vector z = llt.matrixL().solve(err);
    sum += norm + 0.5 * z.squaredNorm();
    ++used;
  }
  if (used == 0) {
    throw InvalidInput("no test row has enough history");
  }
  return sum / used;
}

double rank_sum_test(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) {
    throw InvalidInput("rank test needs two non-empty samples");
  }
  struct Item {
    double v;
    int group;
  };
  std::vector<Item> all;
  for (double v : a) all.push_back({v, 0});
  for (double v : b) all.push_back({v, 1});
  std::sort(all.begin(), all.end(), [](const Item& x, const Item& y) { return x.v < y.v; });
  const double n = static_cast<double>(all.size());
  const double n1 = static_cast<double>(a.size());
  const double n2 = static_cast<double>(b.size());
  double rank_a = 0.0;
  double tie_term = 0.0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j].v == all[i].v) ++j;
    const double avg = 0.5 * static_cast<double>(i + 1 + j);
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    for (std::size_t q = i; q < j; ++q) {
      if (all[q].group == 0) rank_a += avg;
    }
    i = j;
  }
  const double u = rank_a - n1 * (n1 + 1.0) / 2.0;
  const double mean = n1 * n2 / 2.0;
  const double var = n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
  if (!(var > 0.0)) return 1.0;  // all values tied
  const double z = (u - mean) / std::sqrt(var);
  return std::erfc(std::abs(z) / std::numbers::sqrt2);
}

}  // namespace svar
