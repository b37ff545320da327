#include "svar/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace svar {

std::string to_string(LossKind kind) { return kind == LossKind::SS ? "SS" : "LL"; }

double LassoProblem::objective(const Vector& alpha, double lambda) const {
  return alpha.dot(gram * alpha) - 2.0 * linear.dot(alpha) + constant + lambda * alpha.lpNorm<1>();
}

double LassoProblem::lambda_max() const {
  return linear.size() == 0 ? 0.0 : 2.0 * linear.cwiseAbs().maxCoeff();
}

namespace {

double soft_threshold(double z, double gamma) {
  if (z > gamma) return z - gamma;
  if (z < -gamma) return z + gamma;
  return 0.0;
}

// Residual of the subgradient conditions given r = b - G alpha.
double kkt_from_residual(const Vector& r, const Vector& alpha, double lambda) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < alpha.size(); ++j) {
    const double grad = -2.0 * r(j);
    double v;
    if (alpha(j) > 0.0) {
      v = std::abs(grad + lambda);
    } else if (alpha(j) < 0.0) {
      v = std::abs(grad - lambda);
    } else {
      v = std::max(0.0, std::abs(grad) - lambda);
    }
    worst = std::max(worst, v);
  }
  return worst;
}

}  // namespace

double kkt_residual(const LassoProblem& problem, const Vector& alpha, double lambda) {
  const Vector r = problem.linear - problem.gram * alpha;
  return kkt_from_residual(r, alpha, lambda);
}

CoordinateDescentResult coordinate_descent(const LassoProblem& problem, double lambda, const Vector& start,
                                           const CoordinateDescentOptions& options, bool trace) {
  const Eigen::Index d = problem.linear.size();
  if (!(lambda >= 0.0)) {
    throw InvalidInput("penalty must be non-negative");
  }
  if (start.size() != d) {
    throw InvalidInput("warm start has wrong length");
  }
  CoordinateDescentResult out;
  out.alpha = start;
  Vector& a = out.alpha;
  Vector r = problem.linear - problem.gram * a;
  const double half_lambda = 0.5 * lambda;

  auto update = [&](Eigen::Index j) -> double {
    const double gjj = problem.gram(j, j);
    double next = 0.0;
    if (gjj > 0.0) {
      const double z = r(j) + gjj * a(j);
      next = std::isinf(lambda) ? 0.0 : soft_threshold(z, half_lambda) / gjj;
    }
    const double delta = next - a(j);
    if (delta != 0.0) {
      r.noalias() -= problem.gram.col(j) * delta;
      a(j) = next;
    }
    return std::abs(delta);
  };

  std::vector<Eigen::Index> active;
  while (out.sweeps < options.max_sweeps) {
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) max_change = std::max(max_change, update(j));
    ++out.sweeps;
    if (trace) out.objective_trace.push_back(problem.objective(a, lambda));
    if (max_change < options.coef_tol) {
      r = problem.linear - problem.gram * a;
      if (kkt_from_residual(r, a, lambda) < options.kkt_tol) {
        out.converged = true;
        break;
      }
    }
    active.clear();
    for (Eigen::Index j = 0; j < d; ++j) {
      if (a(j) != 0.0) active.push_back(j);
    }
    if (active.empty()) continue;
    // With the support and signs held fixed the target is a quadratic whose
    // minimizer solves G_AA a_A = b_A - (lambda/2) sign(a_A).
    if (!std::isinf(lambda)) {
      const auto m = static_cast<Eigen::Index>(active.size());
      Matrix g_aa(m, m);
      Vector rhs(m);
      for (Eigen::Index u = 0; u < m; ++u) {
        rhs(u) = problem.linear(active[u]) - half_lambda * (a(active[u]) > 0.0 ? 1.0 : -1.0);
        for (Eigen::Index v = 0; v < m; ++v) g_aa(u, v) = problem.gram(active[u], active[v]);
      }
      Eigen::LLT<Matrix> llt(g_aa);
      if (llt.info() == Eigen::Success) {
        const Vector sol = llt.solve(rhs);
        // Walk towards the face minimizer, stopping where the first
        // coefficient reaches zero; the target is convex along the segment.
        double step = 1.0;
        Eigen::Index blocking = -1;
        for (Eigen::Index u = 0; u < m; ++u) {
          const double cur = a(active[u]);
          if (sol(u) * cur <= 0.0) {
            const double t = cur / (cur - sol(u));
            if (t < step) {
              step = t;
              blocking = u;
            }
          }
        }
        if (sol.allFinite() && step > 0.0) {
          Vector next = a;
          for (Eigen::Index u = 0; u < m; ++u) next(active[u]) += step * (sol(u) - a(active[u]));
          if (blocking >= 0) next(active[blocking]) = 0.0;
          for (Eigen::Index u = 0; u < m; ++u) {
            if (next(active[u]) * a(active[u]) < 0.0) next(active[u]) = 0.0;
          }
          if (problem.objective(next, lambda) <= problem.objective(a, lambda)) {
            a = std::move(next);
            r = problem.linear - problem.gram * a;
            if (trace) out.objective_trace.push_back(problem.objective(a, lambda));
            continue;
          }
        }
      }
    }
    // Otherwise iterate on the current support until it settles.
    while (out.sweeps < options.max_sweeps) {
      double change = 0.0;
      for (Eigen::Index j : active) change = std::max(change, update(j));
      ++out.sweeps;
      if (trace) out.objective_trace.push_back(problem.objective(a, lambda));
      if (change < options.coef_tol) break;
    }
  }
  return out;
}

LassoProblem ss_problem(const LagMoments& mom) {
  const int k = mom.dim;
  const int kp = k * mom.order;
  LassoProblem prob;
  prob.gram = Matrix::Zero(static_cast<Eigen::Index>(k) * kp, static_cast<Eigen::Index>(k) * kp);
  for (int c = 0; c < kp; ++c) {
    for (int c2 = 0; c2 < kp; ++c2) {
      const double v = mom.lag_gram(c, c2);
      for (int r = 0; r < k; ++r) prob.gram(c * k + r, c2 * k + r) = v;
    }
  }
  prob.linear = Eigen::Map<const Vector>(mom.cross.data(), mom.cross.size());
  prob.constant = mom.resp_gram.trace();
  return prob;
}

LassoProblem ll_problem(const LagMoments& mom, const Matrix& sigma) {
  const int k = mom.dim;
  const int kp = k * mom.order;
  const Matrix inv_root = sym_inv_sqrt(sigma);
  // (L (x) S)' (L (x) S) = LL' (x) S S and (L (x) S)(I (x) S) y = vec(S S Y L').
  const Matrix w = inv_root * inv_root;
  LassoProblem prob;
  prob.gram.resize(static_cast<Eigen::Index>(k) * kp, static_cast<Eigen::Index>(k) * kp);
  for (int c = 0; c < kp; ++c) {
    for (int c2 = 0; c2 < kp; ++c2) {
      prob.gram.block(c * k, c2 * k, k, k) = mom.lag_gram(c, c2) * w;
    }
  }
  const Matrix wc = w * mom.cross;
  prob.linear = Eigen::Map<const Vector>(wc.data(), wc.size());
  prob.constant = (w * mom.resp_gram).trace() + mom.rows * log_det_spd(sigma);
  return prob;
}

double ll_objective(const LagMoments& mom, const Vector& alpha, const Matrix& sigma, double lambda) {
  const Matrix stacked = Eigen::Map<const Matrix>(alpha.data(), mom.dim, mom.dim * mom.order);
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw DomainError("noise covariance is not positive definite");
  }
  const Matrix s = mom.residual_gram(stacked);
  const double quad = llt.solve(s).trace();
  return quad + mom.rows * log_det_spd(sigma) + lambda * alpha.lpNorm<1>();
}

double lambda_max(const LagMoments& mom, LossKind loss) {
  if (mom.order == 0) return 0.0;
  if (loss == LossKind::SS) return ss_problem(mom).lambda_max();
  // Same arithmetic as the first inner problem of an LL fit, so a fit at
  // exactly this value thresholds every coefficient to zero.
  const Matrix zero = Matrix::Zero(mom.dim, static_cast<Eigen::Index>(mom.dim) * mom.order);
  const Matrix sigma0 = mom.residual_gram(zero) / mom.rows;
  Eigen::LLT<Matrix> llt(sigma0);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("sample covariance is singular");
  }
  return ll_problem(mom, sigma0).lambda_max();
}

namespace {

Matrix repair_covariance(Matrix s, std::vector<std::string>& warnings) {
  Eigen::LLT<Matrix> llt(s);
  if (llt.info() == Eigen::Success) return s;
  const double tr = s.trace();
  if (!(tr > 0.0)) {
    throw NumericalError("residual covariance is degenerate");
  }
  s.diagonal().array() += 1e-8 * tr / s.rows();
  warnings.push_back("residual covariance repaired with a ridge");
  return s;
}

struct Scaling {
  Vector factor;  // alpha = factor .* alpha_scaled
};

Scaling make_scaling(const LagMoments& mom, bool standardize) {
  const int k = mom.dim;
  const int kp = k * mom.order;
  Scaling s;
  s.factor = Vector::Ones(static_cast<Eigen::Index>(k) * kp);
  if (!standardize) return s;
  for (int c = 0; c < kp; ++c) {
    const double sd = std::sqrt(mom.lag_gram(c, c) / mom.rows);
    if (sd > 0.0) s.factor.segment(static_cast<Eigen::Index>(c) * k, k).setConstant(1.0 / sd);
  }
  return s;
}

LassoProblem scaled(const LassoProblem& p, const Scaling& s) {
  LassoProblem out;
  out.gram = s.factor.asDiagonal() * p.gram * s.factor.asDiagonal();
  out.linear = s.factor.cwiseProduct(p.linear);
  out.constant = p.constant;
  return out;
}

}  // namespace

LassoFit fit_lasso(const LagMoments& mom, const Vector& mean, LossKind loss, double lambda,
                   const LassoOptions& options, LassoState* state) {
  if (!(lambda >= 0.0)) {
    throw InvalidInput("penalty must be non-negative");
  }
  const int k = mom.dim;
  const int p = mom.order;
  const int n = mom.rows;
  const Eigen::Index d = static_cast<Eigen::Index>(k) * k * p;
  if (n <= 0) {
    throw InvalidInput("no observations to fit");
  }

  LassoFit fit;
  fit.lambda = lambda;
  fit.loss = loss;

  const Scaling scaling = make_scaling(mom, options.standardize);
  Vector alpha = (state && state->alpha.size() == d) ? state->alpha : Vector::Zero(d);

  auto solve_alpha = [&](const LassoProblem& prob, const Vector& start) {
    if (!options.standardize) {
      auto cd = coordinate_descent(prob, lambda, start, options.cd);
      fit.sweeps += cd.sweeps;
      return std::make_pair(cd.alpha, cd.converged);
    }
    const Vector start_scaled = start.cwiseQuotient(scaling.factor);
    auto cd = coordinate_descent(scaled(prob, scaling), lambda, start_scaled, options.cd);
    fit.sweeps += cd.sweeps;
    return std::make_pair(Vector(cd.alpha.cwiseProduct(scaling.factor)), cd.converged);
  };
  auto kkt_of = [&](const LassoProblem& prob) {
    if (!options.standardize) return kkt_residual(prob, alpha, lambda);
    return kkt_residual(scaled(prob, scaling), alpha.cwiseQuotient(scaling.factor), lambda);
  };
  auto residual_cov = [&](const Vector& a) {
    const Matrix stacked = Eigen::Map<const Matrix>(a.data(), k, static_cast<Eigen::Index>(k) * p);
    return repair_covariance(mom.residual_gram(stacked) / n, fit.warnings);
  };

  Matrix sigma;
  if (loss == LossKind::SS) {
    if (d > 0) {
      const auto prob = ss_problem(mom);
      auto [a, ok] = solve_alpha(prob, alpha);
      alpha = std::move(a);
      fit.converged = ok;
      fit.objective = prob.objective(alpha, lambda);
    } else {
      fit.converged = true;
      fit.objective = mom.resp_gram.trace();
    }
    fit.outer_iterations = 1;
    sigma = residual_cov(alpha);
  } else if (options.fixed_sigma) {
    sigma = *options.fixed_sigma;
    if (d > 0) {
      const auto prob = ll_problem(mom, sigma);
      auto [a, ok] = solve_alpha(prob, alpha);
      alpha = std::move(a);
      fit.converged = ok;
    } else {
      fit.converged = true;
    }
    fit.outer_iterations = 1;
    fit.objective = ll_objective(mom, alpha, sigma, lambda);
    fit.objective_trace.push_back(fit.objective);
  } else {
    // The LL target is not jointly convex; starting every fit from the
    // covariance of the zero model makes the result independent of the path.
    // Warm-started coefficients only speed up the convex inner solves.
    sigma = residual_cov(Vector::Zero(d));
    if (d == 0) {
      sigma = residual_cov(alpha);
      fit.converged = true;
      fit.outer_iterations = 1;
    }
    double last_change = std::numeric_limits<double>::infinity();
    for (int outer = 1; d > 0 && outer <= options.max_outer + 1; ++outer) {
      const auto prob = ll_problem(mom, sigma);
      if (last_change < options.outer_tol && kkt_of(prob) < options.outer_kkt_tol) {
        fit.converged = true;
        break;
      }
      if (outer > options.max_outer) break;
      auto [a, ok] = solve_alpha(prob, alpha);
      (void)ok;
      last_change = (a - alpha).cwiseAbs().maxCoeff();
      alpha = std::move(a);
      sigma = residual_cov(alpha);
      fit.outer_iterations = outer;
      fit.objective_trace.push_back(ll_objective(mom, alpha, sigma, lambda));
    }
    fit.objective = ll_objective(mom, alpha, sigma, lambda);
  }

  if (state) {
    state->alpha = alpha;
    state->sigma = sigma;
  }
  fit.alpha = alpha;
  const Matrix stacked = Eigen::Map<const Matrix>(alpha.data(), k, static_cast<Eigen::Index>(k) * p);
  fit.model = VarModel(unstack_coeffs(stacked, p), sigma, mean);
  return fit;
}

namespace {

LagMoments moments_for(const MultiSeries& series, int order, bool demean, Vector& mean) {
  check_series(series);
  if (order < 0) {
    throw InvalidInput("order must be non-negative");
  }
  if (series.length() <= order) {
    throw InvalidInput("series must be longer than the order");
  }
  Matrix data;
  if (demean) {
    auto c = center(series);
    data = std::move(c.values);
    mean = std::move(c.means);
  } else {
    data = series.values;
    mean = Vector::Zero(series.dim());
  }
  return LagMoments::from(stacked_design(data, order, order));
}

}  // namespace

LassoFit lasso_ss(const MultiSeries& series, int order, double lambda, const LassoOptions& options) {
  Vector mean;
  const auto mom = moments_for(series, order, options.demean, mean);
  return fit_lasso(mom, mean, LossKind::SS, lambda, options);
}

LassoFit lasso_ll(const MultiSeries& series, int order, double lambda, const LassoOptions& options) {
  Vector mean;
  const auto mom = moments_for(series, order, options.demean, mean);
  return fit_lasso(mom, mean, LossKind::LL, lambda, options);
}

std::vector<std::pair<int, int>> block_folds(int rows, int folds) {
  if (folds < 2) {
    throw InvalidInput("cross-validation needs at least two folds");
  }
  if (rows < 2 * folds) {
    throw InvalidInput("too few observations for the requested folds");
  }
  std::vector<std::pair<int, int>> out;
  for (int f = 0; f < folds; ++f) {
    const int begin = static_cast<int>(static_cast<long long>(f) * rows / folds);
    const int end = static_cast<int>(static_cast<long long>(f + 1) * rows / folds);
    out.emplace_back(begin, end);
  }
  return out;
}

std::vector<double> lambda_path(double lmax, int count, double min_ratio) {
  if (count < 1 || !(min_ratio > 0.0) || min_ratio >= 1.0) {
    throw InvalidInput("invalid lambda path specification");
  }
  if (!(lmax > 0.0)) return {0.0};
  std::vector<double> out;
  if (count == 1) return {lmax};
  const double step = std::log(min_ratio) / (count - 1);
  for (int i = 0; i < count; ++i) out.push_back(lmax * std::exp(step * i));
  return out;
}

CvResult cross_validate(const MultiSeries& series, const CvPlan& plan, LossKind loss, const LassoOptions& options) {
  check_series(series);
  if (plan.p_range.empty()) {
    throw InvalidInput("order range is empty");
  }
  if (plan.lambda_grid) {
    const auto& g = *plan.lambda_grid;
    if (g.empty()) throw InvalidInput("lambda grid is empty");
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!(g[i] >= 0.0) || (i > 0 && !(g[i] < g[i - 1]))) {
        throw InvalidInput("lambda grid must be non-negative and strictly decreasing");
      }
    }
  }
  const int k = series.dim();
  Matrix data;
  Vector mean;
  if (options.demean) {
    auto c = center(series);
    data = std::move(c.values);
    mean = std::move(c.means);
  } else {
    data = series.values;
    mean = Vector::Zero(k);
  }

  CvResult result;
  double best_cv = std::numeric_limits<double>::infinity();
  std::vector<double> best_grid;
  for (int p : plan.p_range) {
    if (p < 0 || series.length() <= p) {
      throw InvalidInput("order out of range for the series length");
    }
    const auto design = stacked_design(data, p, p);
    const int n = static_cast<int>(design.responses.cols());
    const auto folds = block_folds(n, plan.folds);
    const auto full = LagMoments::from(design);

    std::vector<double> grid;
    if (p == 0) {
      grid = {0.0};
    } else if (plan.lambda_grid) {
      grid = *plan.lambda_grid;
    } else {
      grid = lambda_path(lambda_max(full, loss), plan.n_lambda, plan.lambda_min_ratio);
    }

    std::vector<double> mean_err(grid.size(), 0.0);
    for (int f = 0; f < static_cast<int>(folds.size()); ++f) {
      const auto [begin, end] = folds[f];
      const int len = end - begin;
      StackedDesign held;
      held.order = p;
      held.lags = design.lags.middleCols(begin, len);
      held.responses = design.responses.middleCols(begin, len);
      const auto held_mom = LagMoments::from(held);
      LagMoments train = full;
      train.lag_gram -= held_mom.lag_gram;
      train.cross -= held_mom.cross;
      train.resp_gram -= held_mom.resp_gram;
      train.rows -= len;

      LassoState state;
      for (std::size_t g = 0; g < grid.size(); ++g) {
        const auto fit = fit_lasso(train, Vector::Zero(k), loss, grid[g], options, &state);
        const Matrix stacked = stack_coeffs(fit.model.coeffs, k);
        Matrix resid = held.responses;
        if (p > 0) resid.noalias() -= stacked * held.lags;
        const double err = resid.squaredNorm() / (static_cast<double>(k) * len);
        result.table.push_back({p, grid[g], f, err});
        mean_err[g] += err / static_cast<double>(folds.size());
      }
    }
    CvSummary summary{p, grid[0], mean_err[0]};
    for (std::size_t g = 1; g < grid.size(); ++g) {
      if (mean_err[g] < summary.cv_min) {
        summary.cv_min = mean_err[g];
        summary.lambda_opt = grid[g];
      }
    }
    result.per_order.push_back(summary);
    if (summary.cv_min < best_cv) {
      best_cv = summary.cv_min;
      result.p_star = p;
      result.lambda_star = summary.lambda_opt;
      best_grid = grid;
    }
  }

  // Full-sample fit, following the same warm-started path down to lambda*.
  const auto full = LagMoments::from(stacked_design(data, result.p_star, result.p_star));
  LassoState state;
  for (double lam : best_grid) {
    result.fit = fit_lasso(full, mean, loss, lam, options, &state);
    if (lam == result.lambda_star) break;
  }
  result.fit.cv_error = best_cv;
  return result;
}

}  // namespace svar
