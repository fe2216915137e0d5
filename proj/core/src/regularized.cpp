#include "lrtar/regularized.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

namespace lrtar {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void check_balanced(const DenseTensor& t) {
  const int order = t.order();
  if (order < 2 || order % 2 != 0)
    throw std::invalid_argument("expected a balanced tensor of even order 2d");
  const int d = order / 2;
  for (int i = 0; i < d; ++i)
    if (t.dim(i) != t.dim(d + i))
      throw std::invalid_argument("expected a balanced tensor: dim mismatch");
}

std::vector<std::vector<int>> one_mode_sets(int d) {
  std::vector<std::vector<int>> sets;
  for (int i = 0; i < 2 * d; ++i) sets.push_back({i});
  return sets;
}

double matricization_norm_sum(const DenseTensor& t,
                              const std::vector<std::vector<int>>& sets) {
  double total = 0.0;
  for (const auto& s : sets) total += nuclear_norm(matricize(t, s));
  return total;
}

// Consensus ADMM over an arbitrary family of matricization orientations.
// A populated `state` overrides `init`: the primary/surrogate iterates carry
// over and the multipliers are rescaled by the lambda/rho ratios (converged
// scaled multipliers are proportional to lambda/rho), which is what makes
// warm starts along a lambda homotopy effective.
FitReport admm_fit(const RegressionDesign& design,
                   const std::vector<std::vector<int>>& row_sets,
                   const RegOptions& opts, const DenseTensor& init,
                   AdmmState* state = nullptr) {
  const auto start = Clock::now();
  if (opts.lambda <= 0.0) throw std::invalid_argument("admm: lambda must be > 0");
  if (opts.rho <= 0.0) throw std::invalid_argument("admm: rho must be > 0");
  const int d = design.d();
  const Dims full = design.full_dims();
  if (init.dims() != full) throw std::invalid_argument("admm: init shape mismatch");
  const auto s2 = response_modes(d);
  const size_t k_count = row_sets.size();
  const double t_count = static_cast<double>(design.t_count());

  Matrix gram = design.predictor.transpose() * design.predictor / t_count;
  // opts.rho is expressed in units of the design's mean curvature: the
  // iteration is the plain algorithm applied to the standardized problem
  // (data divided by its root-mean-square scale), which keeps the consensus
  // penalty matched to the loss whatever the scale of the series. The
  // standardization is fixed before the first iteration.
  const double curvature =
      std::max(gram.trace() / static_cast<double>(gram.rows()), 1e-12);
  const double rho = opts.rho * curvature;
  gram.diagonal().array() += static_cast<double>(k_count) * rho;
  Eigen::LDLT<Matrix> ldlt = gram.ldlt();
  const Matrix yx = design.response.transpose() * design.predictor / t_count;

  DenseTensor a = init;
  std::vector<DenseTensor> w(k_count, init);
  std::vector<DenseTensor> c(k_count, DenseTensor(full));
  if (state && state->surrogates.size() == k_count && state->lambda > 0.0 &&
      state->primary.dims() == full) {
    a = state->primary;
    w = state->surrogates;
    c = std::move(state->multipliers);
    // Scaled multipliers converge to lambda/rho times a fixed subgradient, so
    // carrying them across fits rescales by both ratios (rho changes when the
    // design, and hence its curvature, changes between warm-started fits).
    const double scale = (opts.lambda * state->rho) / (state->lambda * rho);
    for (auto& ck : c) ck *= scale;
  }
  const double tau = opts.lambda / (2.0 * rho);

  FitReport report;
  report.lambda = opts.lambda;
  report.converged = false;

  int iter = 0;
  for (; iter < opts.max_iter; ++iter) {
    Matrix rhs = yx;
    for (size_t k = 0; k < k_count; ++k)
      rhs += rho * matricize(w[k] - c[k], s2);
    Matrix b = ldlt.solve(rhs.transpose()).transpose();
    a = dematricize(b, full, s2);

    double dual_sq = 0.0;
    for (size_t k = 0; k < k_count; ++k) {
      Matrix thresholded =
          soft_threshold_svd(matricize(a + c[k], row_sets[k]), tau);
      DenseTensor w_new = dematricize(thresholded, full, row_sets[k]);
      dual_sq += std::pow((w_new - w[k]).norm(), 2);
      w[k] = std::move(w_new);
    }

    double primal_max = 0.0;
    for (size_t k = 0; k < k_count; ++k) {
      DenseTensor gap = a - w[k];
      c[k] += gap;
      primal_max = std::max(primal_max, gap.norm());
    }

    const double denom = std::max(a.norm(), 1e-12);
    const double primal = primal_max / denom;
    const double dual = rho * std::sqrt(dual_sq) / denom;
    report.primal_residuals.push_back(primal);
    report.dual_residuals.push_back(dual);

    if (primal < opts.tol_primal && dual < opts.tol_dual) {
      report.converged = true;
      ++iter;
      break;
    }
  }

  // Penalized objective evaluated once at the returned point; the ALS-style
  // per-iteration trace would cost an extra SVD family per iteration.
  report.objective_trace.push_back(
      prediction_loss(design, matricize(a, s2)) +
      opts.lambda * matricization_norm_sum(a, row_sets));
  if (state) {
    state->primary = a;
    state->surrogates = std::move(w);
    state->multipliers = std::move(c);
    state->lambda = opts.lambda;
    state->rho = rho;
  }
  report.estimate = std::move(a);
  report.iterations = iter;
  report.elapsed_s = seconds_since(start);
  return report;
}

DenseTensor mn_init(const RegressionDesign& design) {
  try {
    return fit_ols(design).estimate;
  } catch (const std::runtime_error&) {
    return DenseTensor(design.full_dims());  // zero start when T < p
  }
}

}  // namespace

std::vector<std::vector<int>> square_mode_sets(int d) {
  if (d < 1) throw std::invalid_argument("square_mode_sets: d must be >= 1");
  const int k_count = 1 << (d - 1);
  std::vector<std::vector<int>> sets;
  sets.reserve(static_cast<size_t>(k_count));
  for (int k = 0; k < k_count; ++k) {
    std::vector<int> s{0};
    for (int i = 1; i < d; ++i)
      s.push_back((k >> (i - 1)) & 1 ? d + i : i);
    std::sort(s.begin(), s.end());
    sets.push_back(std::move(s));
  }
  return sets;
}

double ssn_norm(const DenseTensor& t) {
  check_balanced(t);
  return matricization_norm_sum(t, square_mode_sets(t.order() / 2));
}

double sn_norm(const DenseTensor& t) {
  check_balanced(t);
  return matricization_norm_sum(t, one_mode_sets(t.order() / 2));
}

FitReport fit_mn(const RegressionDesign& design, const RegOptions& opts,
                 const std::optional<DenseTensor>& init, AdmmState* state) {
  return admm_fit(design, {predictor_modes(design.d())}, opts,
                  init ? *init : mn_init(design), state);
}

FitReport fit_sn(const RegressionDesign& design, const RegOptions& opts,
                 const std::optional<DenseTensor>& init, AdmmState* state) {
  DenseTensor start;
  if (init) {
    start = *init;
  } else if (state && state->lambda > 0.0) {
    start = DenseTensor(design.full_dims());  // state overrides init anyway
  } else {
    RegOptions mn_opts = opts;
    mn_opts.lambda = std::pow(2.0, design.d() - 1) * opts.lambda;
    start = fit_mn(design, mn_opts).estimate;
  }
  return admm_fit(design, one_mode_sets(design.d()), opts, start, state);
}

FitReport fit_ssn(const RegressionDesign& design, const RegOptions& opts,
                  const std::optional<DenseTensor>& init, AdmmState* state) {
  DenseTensor start;
  if (init) {
    start = *init;
  } else if (state && state->lambda > 0.0) {
    start = DenseTensor(design.full_dims());
  } else {
    RegOptions mn_opts = opts;
    mn_opts.lambda = std::pow(2.0, design.d() - 1) * opts.lambda;
    start = fit_mn(design, mn_opts).estimate;
  }
  return admm_fit(design, square_mode_sets(design.d()), opts, start, state);
}

TruncationResult truncate_tssn(const DenseTensor& estimate, double gamma) {
  check_balanced(estimate);
  if (gamma <= 0.0) throw std::invalid_argument("truncate_tssn: gamma must be > 0");
  const int order = estimate.order();

  TruncationResult result;
  result.ranks.resize(static_cast<size_t>(order));
  std::vector<Matrix> factors(static_cast<size_t>(order));
  for (int i = 0; i < order; ++i) {
    Svd svd = thin_svd(matricize(estimate, {i}));
    Index rank = 0;
    for (Index j = 0; j < svd.sigma.size(); ++j)
      if (svd.sigma[j] > gamma) ++rank;
    if (rank == 0) {
      rank = 1;
      result.rank_floored = true;
    }
    result.ranks[static_cast<size_t>(i)] = rank;
    factors[static_cast<size_t>(i)] = svd.u.leftCols(rank);
  }

  DenseTensor core = estimate;
  for (int i = 0; i < order; ++i)
    core = mode_product(core, factors[static_cast<size_t>(i)].transpose(), i);
  result.estimate = core;
  for (int i = 0; i < order; ++i)
    result.estimate = mode_product(result.estimate, factors[static_cast<size_t>(i)], i);
  return result;
}

double default_gamma(double lambda_ssn, int d) {
  if (lambda_ssn <= 0.0) throw std::invalid_argument("default_gamma: lambda must be > 0");
  return std::pow(2.0, d - 1) * lambda_ssn / 4.0;
}

double ssn_lambda_max(const RegressionDesign& design) {
  const int d = design.d();
  Matrix cross = design.response.transpose() * design.predictor /
                 static_cast<double>(design.t_count());
  DenseTensor moment = dematricize(cross, design.full_dims(), response_modes(d));
  double max_op = 0.0;
  for (const auto& s : square_mode_sets(d)) {
    Svd svd = thin_svd(matricize(moment, s));
    if (svd.sigma.size() > 0) max_op = std::max(max_op, svd.sigma[0]);
  }
  return std::pow(2.0, 1 - d) * max_op;
}

std::vector<double> default_lambda_grid(const RegressionDesign& design, int count) {
  if (count < 1) throw std::invalid_argument("default_lambda_grid: count must be >= 1");
  const double lmax = ssn_lambda_max(design);
  if (lmax <= 0.0)
    throw std::runtime_error("default_lambda_grid: degenerate data (zero cross moment)");
  if (count == 1) return {lmax};
  std::vector<double> grid(static_cast<size_t>(count));
  const double lo = std::log(0.01 * lmax);
  const double hi = std::log(lmax);
  for (int i = 0; i < count; ++i)
    grid[static_cast<size_t>(i)] =
        std::exp(lo + (hi - lo) * static_cast<double>(i) / (count - 1));
  return grid;
}

BicSelection select_lambda_bic(const RegressionDesign& design,
                               RegEstimator estimator,
                               const std::vector<double>& grid,
                               const RegOptions& base) {
  std::vector<double> lambdas = grid.empty() ? default_lambda_grid(design) : grid;
  for (double l : lambdas)
    if (l <= 0.0) throw std::invalid_argument("select_lambda_bic: lambda must be > 0");
  // Fit from the largest lambda down, warm-starting each fit from the
  // previous solution (homotopy): same fixed points at tolerance, far fewer
  // ADMM iterations than independent cold fits.
  std::sort(lambdas.begin(), lambdas.end(), std::greater<double>());

  const int d = design.d();
  const double t_count = static_cast<double>(design.t_count());
  const double p = static_cast<double>(design.p());
  // Degrees of freedom use the square-matricization rank count for every
  // estimator, so MN/SN/SSN selections trade parsimony against fit on the
  // same complexity scale.
  const auto sets = square_mode_sets(d);
  const double set_weight = 1.0 / static_cast<double>(sets.size());
  // Rank counting for df must ignore the numerical residue the stopping rule
  // leaves on soft-thresholded (exactly zero in the limit) singular values:
  // iterates satisfy the consensus only to ~1e-5 relative, so a fixed tiny
  // tolerance counts every zeroed direction as nonzero and the df term goes
  // flat across the grid. Singular values at or below the proximal threshold
  // lambda/(2 rho_eff) are shrinkage residue, not model complexity.
  const Matrix gram_for_scale =
      design.predictor.transpose() * design.predictor / t_count;
  const double curvature = std::max(
      gram_for_scale.trace() / static_cast<double>(gram_for_scale.rows()),
      1e-12);

  BicSelection selection;
  double best_bic = std::numeric_limits<double>::infinity();
  AdmmState state;  // homotopy: iterates and multipliers carry across lambdas
  for (double lambda : lambdas) {
    RegOptions opts = base;
    opts.lambda = lambda;
    FitReport fit;
    switch (estimator) {
      case RegEstimator::MN:
        fit = fit_mn(design, opts, std::nullopt, &state);
        break;
      case RegEstimator::SN:
        fit = fit_sn(design, opts, std::nullopt, &state);
        break;
      case RegEstimator::SSN:
        fit = fit_ssn(design, opts, std::nullopt, &state);
        break;
    }

    const double rss = t_count * prediction_loss(design, fit.estimate);
    const double tau = lambda / (2.0 * base.rho * curvature);
    double df = 0.0;
    for (const auto& s : sets) {
      Matrix mat = matricize(fit.estimate, s);
      const double size_sum =
          static_cast<double>(mat.rows()) + static_cast<double>(mat.cols());
      Svd svd = thin_svd(mat);
      const double sigma_max = svd.sigma.size() > 0 ? svd.sigma[0] : 0.0;
      const double cutoff = std::max(tau, 1e-6 * sigma_max);
      double rank = 0.0;
      for (Index j = 0; j < svd.sigma.size(); ++j)
        if (svd.sigma[j] > cutoff) rank += 1.0;
      df += set_weight * rank * (size_sum - rank);
    }
    const double bic =
        t_count * p * std::log(std::max(rss / (t_count * p), 1e-300)) +
        std::log(t_count) * df;
    selection.table.push_back(
        {lambda, bic, rss, df, fit.iterations, fit.converged});

    // strict < so that ties resolve to the larger lambda (grid is descending)
    if (bic < best_bic) {
      best_bic = bic;
      selection.lambda = lambda;
      selection.fit = std::move(fit);
    }
  }
  std::reverse(selection.table.begin(), selection.table.end());  // ascending
  return selection;
}

}  // namespace lrtar
