#pragma once

#include "lrtar/model.hpp"
#include "lrtar/tensor.hpp"
#include "lrtar/tucker.hpp"

#include <optional>
#include <string>

namespace lrtar {

/// Lagged regression data: row t of response is vec(Y_{t+1})^T and row t of
/// predictor is vec(Y_t)^T, built from a series of length T+1.
struct RegressionDesign {
  Matrix response;   // T x p
  Matrix predictor;  // T x p
  Dims dims;         // (p_1,...,p_d)

  static RegressionDesign from_series(const TensorSeries& series);

  Index t_count() const { return response.rows(); }
  Index p() const { return response.cols(); }
  int d() const { return static_cast<int>(dims.size()); }
  Dims full_dims() const;
};

struct FitReport {
  DenseTensor estimate;  // order-2d transition estimate
  std::optional<Dims> ranks;
  std::vector<double> objective_trace;
  int iterations = 0;
  bool converged = true;
  double elapsed_s = 0.0;

  // regularized-fit diagnostics
  double lambda = 0.0;
  double gamma = 0.0;
  bool rank_floored = false;
  std::vector<double> primal_residuals;
  std::vector<double> dual_residuals;
};

struct AlsOptions {
  double tol = 1e-6;    // relative objective change
  int max_iter = 500;   // sweeps
  double ridge = 1e-10;
};

/// (1/T) sum_t ||Y_t - <B, Y_{t-1}>||_F^2 at the given [S2] matricization.
double prediction_loss(const RegressionDesign& design, const Matrix& b_s2);
double prediction_loss(const RegressionDesign& design, const DenseTensor& estimate);

FitReport fit_ols(const RegressionDesign& design);

FitReport fit_rrr(const RegressionDesign& design, Index rank);

FitReport fit_ltr(const RegressionDesign& design, const Dims& ranks,
                  const std::optional<DenseTensor>& init = std::nullopt,
                  const AlsOptions& opts = {});

/// Plug-in asymptotic covariance of sqrt(T) vec((A_hat - A)_[S1]), where
/// vec is column-major, so the full-rank case reduces to the OLS covariance
/// Sigma_e kron Sigma_y^{-1}.
Matrix asymptotic_covariance(const LrtarModel& estimate,
                             const RegressionDesign& design);

}  // namespace lrtar
