// Runs every acceptance criterion and prints one PASS/FAIL line for each.

#include "../helpers.hpp"

#include "svar/cli.hpp"
#include "svar/eval.hpp"
#include "svar/lasso.hpp"
#include "svar/spectral.hpp"
#include "svar/two_stage.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>

using namespace svar;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  std::printf("criterion %2d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0, double e = 0, double g = 0) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a, b, c, d, e, g);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

const MetricsRow& row_of(const MetricsTable& t, Method m) {
  for (const auto& r : t.rows) {
    if (r.method == m) return r;
  }
  throw std::logic_error("method missing from table");
}

int worker_count() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

}  // namespace

int main() {
  // 1-3: simulation study on the six-series model.
  auto low = table1_preset("table1-delta1");
  low.replications = 200;
  low.threads = worker_count();
  const auto t0 = std::chrono::steady_clock::now();
  const auto low_table = run_study(low);
  const double low_secs = seconds_since(t0);

  const auto& ts = row_of(low_table, Method::two_stage);
  report(1,
         ts.p_hat >= 0.98 && ts.p_hat <= 1.02 && ts.m_hat >= 5.3 && ts.m_hat <= 6.9 && ts.mse >= 0.08 &&
             ts.mse <= 0.15 && low_secs < 600.0 && !ts.flagged,
         fmt("two-stage p_hat=%.3f m_hat=%.3f bias2=%.3f var=%.3f mse=%.3f; full preset %.0f s", ts.p_hat, ts.m_hat,
             ts.bias2, ts.variance, ts.mse, low_secs));

  const auto& ll = row_of(low_table, Method::lasso_ll);
  const auto& ss = row_of(low_table, Method::lasso_ss);
  report(2, ll.m_hat > 12.0 && ll.p_hat > 1.05 && ss.m_hat > 12.0 && ss.p_hat > 1.05,
         fmt("lasso_ll p_hat=%.3f m_hat=%.3f; lasso_ss p_hat=%.3f m_hat=%.3f", ll.p_hat, ll.m_hat, ss.p_hat, ss.m_hat));

  auto high = table1_preset("table1-delta100");
  high.replications = 100;
  high.threads = worker_count();
  const auto high_table = run_study(high);
  const double mse_ts = row_of(high_table, Method::two_stage).mse;
  const double mse_ll = row_of(high_table, Method::lasso_ll).mse;
  const double mse_ss = row_of(high_table, Method::lasso_ss).mse;
  report(3, mse_ts < mse_ll && mse_ll < mse_ss && mse_ss > 5.0 * ss.mse,
         fmt("delta2=100 mse two-stage=%.3f ll=%.3f ss=%.3f; ss ratio to delta2=1: %.1f", mse_ts, mse_ll, mse_ss,
             mse_ss / ss.mse));

  // 4: the two PSC routes on random Hermitian PD matrices.
  {
    std::mt19937_64 rng(4);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
      const int k = 3 + trial % 4;
      SpectralDensityEstimate f;
      f.frequencies = {0.5};
      f.matrices = {testing::random_hpd(k, rng)};
      const auto psc = psc_from_inverse(f);
      for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
          if (i == j) continue;
          worst = std::max(worst, std::abs(psc.psc[0](i, j) - psc_from_residual_filter(f, i, j)[0]));
        }
      }
    }
    report(4, worst < 1e-8, fmt("max entrywise difference %.2e over 1000 spectra", worst));
  }

  // 5: zero partial coherence despite a non-zero coefficient.
  {
    const auto model = reference::zero_psc_var1();
    const auto psc = psc_from_inverse(model_spectrum(model, fourier_half_grid(1024)));
    double worst = 0.0;
    for (const auto& m : psc.psc) worst = std::max(worst, std::abs(m(0, 1)));
    report(5, worst < 1e-10 && model.coeffs[0](0, 1) == 0.5, fmt("max |PSC_12| = %.2e", worst));
  }

  // 6: PSC screening versus an oracle first stage on the same model.
  {
    StudyConfig c;
    c.generator = reference::zero_psc_var1();
    c.replications = 200;
    c.seed = 6;
    c.methods = {Method::two_stage, Method::oracle_two_stage};
    c.threads = worker_count();
    const auto t = run_study(c);
    std::vector<double> nz_ts, nz_or, bic_ts, bic_or;
    for (const auto& r : t.records) {
      if (!r.ok) continue;
      (r.method == Method::two_stage ? nz_ts : nz_or).push_back(r.m_hat);
      (r.method == Method::two_stage ? bic_ts : bic_or).push_back(*r.bic);
    }
    const double p_nz = rank_sum_test(nz_ts, nz_or);
    const double p_bic = rank_sum_test(bic_ts, bic_or);
    double mean_ts = 0.0, mean_or = 0.0;
    for (double v : bic_ts) mean_ts += v / bic_ts.size();
    for (double v : bic_or) mean_or += v / bic_or.size();
    const double gap = std::abs(mean_ts - mean_or) / std::abs(mean_or);
    const bool complete = nz_ts.size() == 200 && nz_or.size() == 200;
    report(6, complete && p_nz > 0.01 && p_bic > 0.01 && gap < 0.01,
           fmt("rank-sum p (non-zeros)=%.3f p (BIC)=%.3f; mean BIC gap %.3f%%", p_nz, p_bic, 100.0 * gap));
  }

  // 7: full-pattern constrained MLE equals least squares.
  {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> n(0.0, 0.15);
    double worst = 0.0;
    int monotone = 0;
    for (int d = 0; d < 100; ++d) {
      const int k = 2 + d % 4;
      const int p = 1 + d % 3;
      std::vector<Matrix> a;
      VarModel m;
      do {
        a.assign(p, Matrix(k, k));
        for (auto& mat : a) {
          for (Eigen::Index i = 0; i < mat.size(); ++i) mat(i) = n(rng) / p;
        }
        m = VarModel(a, testing::random_spd(k, rng));
      } while (!is_causal(m));
      const auto x = simulate(m, 80 + 20 * (d % 5), 1000 + d);
      const auto fit = constrained_mle(x, p, SparsityPattern::full(p, k));
      const auto c = center(x);
      const Matrix ls = least_squares_coeffs(LagMoments::from(stacked_design(c.values, p, p)));
      worst = std::max(worst, (stack_coeffs(fit.model.coeffs, k) - ls).cwiseAbs().maxCoeff());
      bool ok = true;
      for (std::size_t i = 1; i < fit.neg2_loglik_trace.size(); ++i) {
        // Slack of a few thousand ulps for re-evaluation at the fixed point.
        const double prev = fit.neg2_loglik_trace[i - 1];
        ok = ok && fit.neg2_loglik_trace[i] <= prev + 1e-12 * std::abs(prev);
      }
      monotone += ok;
    }
    report(7, worst < 1e-8 && monotone == 100,
           fmt("max |MLE - LS| = %.2e; -2 loglik non-increasing on %.0f of 100 runs", worst, monotone));
  }

  // 8: subgradient conditions of converged Lasso fits.
  {
    double worst = 0.0;
    int fits = 0, not_converged = 0, nonzero_at_max = 0;
    for (int r = 0; r < 20; ++r) {
      const auto x = simulate(reference::six_series_var1(r % 2 ? 100.0 : 1.0), 100, 8000 + r);
      const auto c = center(x);
      for (int p = 1; p <= 3; ++p) {
        const auto mom = LagMoments::from(stacked_design(c.values, p, p));
        for (LossKind loss : {LossKind::SS, LossKind::LL}) {
          const double lmax = lambda_max(mom, loss);
          LassoState state;
          for (double lam : lambda_path(lmax, 12, 1e-3)) {
            const auto fit = fit_lasso(mom, c.means, loss, lam, {}, &state);
            ++fits;
            if (!fit.converged) {
              ++not_converged;
              continue;
            }
            const auto prob = loss == LossKind::SS ? ss_problem(mom) : ll_problem(mom, fit.model.noise_cov);
            worst = std::max(worst, kkt_residual(prob, fit.alpha, lam));
          }
          for (double lam : {lmax, 2.0 * lmax}) {
            const auto fit = fit_lasso(mom, c.means, loss, lam, {});
            if ((fit.alpha.array() != 0.0).any()) ++nonzero_at_max;
          }
        }
      }
    }
    report(8, worst < 1e-5 && nonzero_at_max == 0,
           fmt("max KKT residual %.2e over %.0f converged fits (%.0f not converged); non-zero fits at lambda_max: %.0f",
               worst, fits - not_converged, not_converged, nonzero_at_max));
  }

  // 9: true-support fits at T = 10000 lie within three standard errors.
  {
    const auto truth = reference::six_series_var1(1.0);
    const auto support = SparsityPattern::support_of(truth);
    int covered = 0;
    for (int r = 0; r < 100; ++r) {
      const auto x = simulate(truth, 10000, splitmix64(9000 + r));
      const auto fit = constrained_mle(x, 1, support);
      bool all = true;
      for (const auto& t : t_statistics(fit)) {
        const double target = truth.coeffs[t.index.lag - 1](t.index.row, t.index.col);
        all = all && std::abs(t.estimate - target) <= 3.0 * t.std_error;
      }
      covered += all;
    }
    report(9, covered >= 95, fmt("all coefficients within 3 s.e. in %.0f of 100 replications", covered));
  }

  // 10: repeated bench runs write identical metrics.
  {
    const fs::path dir = fs::temp_directory_path() / "svar_acceptance_bench";
    fs::remove_all(dir);
    auto bench = [&](const std::string& name, const std::string& threads) {
      std::ostringstream out, err;
      return cli::run({"bench", "--preset", "table1-delta1", "--replications", "10", "--seed", "10", "--threads",
                       threads, "--out-dir", (dir / name).string()},
                      out, err);
    };
    const int rc = bench("a", "1") + bench("b", "1") + bench("c", "3");
    const std::string a = slurp(dir / "a" / "metrics.csv");
    const bool same = !a.empty() && a == slurp(dir / "b" / "metrics.csv") && a == slurp(dir / "c" / "metrics.csv");
    fs::remove_all(dir);
    report(10, rc == 0 && same, same ? "metrics.csv identical across three runs" : "metrics.csv differs");
  }

  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
