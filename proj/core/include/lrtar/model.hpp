#pragma once

#include "lrtar/tensor.hpp"
#include "lrtar/tucker.hpp"

#include <cstdint>
#include <optional>

namespace lrtar {

/// Ordered collection of equal-shape tensor observations.
struct TensorSeries {
  Dims dims;
  std::vector<DenseTensor> observations;

  Index length() const { return static_cast<Index>(observations.size()); }
  void push_back(DenseTensor t);

  /// Rows are vec(Y_t)^T, t = 0..T-1.
  Matrix to_matrix() const;
  static TensorSeries from_matrix(const Matrix& m, const Dims& dims);
};

/// Order-1 autoregression Y_t = <A, Y_{t-1}> + E_t with a balanced 2d-order
/// transition tensor and Gaussian noise of covariance noise_cov.
class LrtarModel {
public:
  LrtarModel(DenseTensor transition, Matrix noise_cov,
             std::optional<TuckerDecomposition> tucker = std::nullopt);

  int d() const { return d_; }
  Dims obs_dims() const;  // (p_1,...,p_d)
  Index p() const { return p_; }

  const DenseTensor& transition() const { return transition_; }
  const Matrix& noise_cov() const { return noise_cov_; }
  const std::optional<TuckerDecomposition>& tucker() const { return tucker_; }

  /// A_[S2], the VAR transition matrix: vec(Y_t mean) = A_[S2] vec(Y_{t-1}).
  const Matrix& transition_matrix() const { return transition_matrix_; }

  double spectral_radius() const;

  DenseTensor conditional_mean(const DenseTensor& y_prev) const;

  TensorSeries simulate(Index t_count, Index burn_in, std::uint64_t seed) const;

private:
  int d_;
  Index p_;
  DenseTensor transition_;
  Matrix noise_cov_;
  Matrix noise_cov_sqrt_;
  Matrix transition_matrix_;
  std::optional<TuckerDecomposition> tucker_;
};

/// Simulation DGP: Gaussian core rescaled to Frobenius norm 5, factor
/// matrices from leading singular vectors of square Gaussian matrices,
/// resampled until the stationarity condition holds. Identity noise.
LrtarModel make_dgp(const Dims& dims, const Dims& ranks, std::uint64_t seed);

/// Parameter count of the rank-(r_1,...,r_{2d}) model.
long long param_count(const Dims& dims, const Dims& ranks);

std::vector<int> predictor_modes(int d);  // S_1 = {0,...,d-1}
std::vector<int> response_modes(int d);   // S_2 = {d,...,2d-1}

}  // namespace lrtar
