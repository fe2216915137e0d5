#pragma once

#include "lrtar/tensor.hpp"

namespace lrtar {

struct TuckerDecomposition {
  DenseTensor core;             // dims (r_1,...,r_d)
  std::vector<Matrix> factors;  // i-th is p_i x r_i, orthonormal columns
  Dims ranks;

  DenseTensor reconstruct() const;
};

/// Forces the first entry of magnitude > 1e-12 in each column positive.
void fix_column_signs(Matrix& u);

/// Left singular vectors and singular values, descending.
struct Svd {
  Matrix u;
  Vector sigma;
  Matrix v;
};
Svd thin_svd(const Matrix& m);

TuckerDecomposition hosvd(const DenseTensor& t, const Dims& ranks);

Dims multilinear_ranks(const DenseTensor& t, double tol = 1e-8);

/// Proximal map of tau * nuclear norm: soft-thresholds the singular values.
Matrix soft_threshold_svd(const Matrix& m, double tau);

double nuclear_norm(const Matrix& m);

}  // namespace lrtar
