#pragma once

#include "lrtar/least_squares.hpp"

namespace lrtar {

/// Square matricization index sets I_1,...,I_{2^{d-1}} (0-based modes of a
/// balanced 2d-order tensor): each set contains mode 0 and, for each
/// i in 1..d-1, exactly one of {i, d+i}. I_1 = S_1 = {0,...,d-1}, and every
/// induced matricization is p x p.
std::vector<std::vector<int>> square_mode_sets(int d);

/// Sum of nuclear norms over all square matricizations.
double ssn_norm(const DenseTensor& t);

/// Sum of nuclear norms over all 2d one-mode matricizations.
double sn_norm(const DenseTensor& t);

/// Full ADMM state (primary iterate, surrogates, scaled multipliers); lets a
/// homotopy over lambda warm-start the multipliers, not just the estimate.
struct AdmmState {
  DenseTensor primary;
  std::vector<DenseTensor> surrogates;
  std::vector<DenseTensor> multipliers;
  double lambda = 0.0;
  double rho = 1.0;
};

struct RegOptions {
  double lambda = 0.0;
  double rho = 1.0;
  int max_iter = 500;
  double tol_primal = 1e-5;  // relative to ||A||_F
  double tol_dual = 1e-5;
};

/// Nuclear-norm estimators, all solved by the same consensus ADMM:
/// minimize (1/T) sum_t ||Y_t - <A, Y_{t-1}>||_F^2 + lambda * sum_k ||A_[I_k]||_*
/// over the estimator-specific matricization family (MN: the single [S_1]
/// matricization; SN: all 2d one-mode matricizations; SSN: all square
/// matricizations). `init` warm-starts the primary variable and surrogates.
/// When `state` is non-null and already populated it overrides `init` (its
/// multipliers are rescaled by the lambda ratio); the converged state is
/// written back for the next fit in a homotopy.
FitReport fit_mn(const RegressionDesign& design, const RegOptions& opts,
                 const std::optional<DenseTensor>& init = std::nullopt,
                 AdmmState* state = nullptr);
FitReport fit_sn(const RegressionDesign& design, const RegOptions& opts,
                 const std::optional<DenseTensor>& init = std::nullopt,
                 AdmmState* state = nullptr);
FitReport fit_ssn(const RegressionDesign& design, const RegOptions& opts,
                  const std::optional<DenseTensor>& init = std::nullopt,
                  AdmmState* state = nullptr);

struct TruncationResult {
  DenseTensor estimate;
  Dims ranks;
  bool rank_floored = false;  // some mode had no singular value above gamma
};

/// Per-mode singular-value truncation at threshold gamma: keep the left
/// singular vectors of estimate_(i) with sigma > gamma (at least one per
/// mode), project to the core, and expand back.
TruncationResult truncate_tssn(const DenseTensor& estimate, double gamma);

/// Recommended truncation threshold 2^{d-1} * lambda / 4.
double default_gamma(double lambda_ssn, int d);

/// Grid upper bound: 2^{1-d} times the largest operator norm over the square
/// matricizations of the lag-1 cross moment (1/T) sum_t Y_{t-1} o Y_t.
double ssn_lambda_max(const RegressionDesign& design);

/// 20 log-spaced values spanning [0.01, 1] * ssn_lambda_max(design).
std::vector<double> default_lambda_grid(const RegressionDesign& design,
                                        int count = 20);

enum class RegEstimator { MN, SN, SSN };

struct BicEntry {
  double lambda = 0.0;
  double bic = 0.0;
  double rss = 0.0;
  double df = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct BicSelection {
  double lambda = 0.0;
  FitReport fit;
  std::vector<BicEntry> table;
};

/// Fits the estimator over the grid and picks the lambda minimizing
/// T*p*log(RSS/(T*p)) + log(T)*df, where df averages s_k (m_k + n_k - s_k)
/// over the estimator's own m_k x n_k matricization family (for SSN this is
/// 2^{-(d-1)} sum_k s_k (2p - s_k)), with s_k the rank of the fitted
/// matricization at relative tolerance 1e-6. Ties resolve to the larger
/// lambda.
BicSelection select_lambda_bic(const RegressionDesign& design,
                               RegEstimator estimator,
                               const std::vector<double>& grid = {},
                               const RegOptions& base = {});

}  // namespace lrtar
