#include "lrtar/tucker.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <stdexcept>

namespace lrtar {

DenseTensor TuckerDecomposition::reconstruct() const {
  DenseTensor out = core;
  for (int i = 0; i < core.order(); ++i)
    out = mode_product(out, factors[static_cast<size_t>(i)], i);
  return out;
}

void fix_column_signs(Matrix& u) {
  for (Index j = 0; j < u.cols(); ++j) {
    double lead = 0.0;
    for (Index i = 0; i < u.rows(); ++i) {
      if (std::abs(u(i, j)) > 1e-12) {
        lead = u(i, j);
        break;
      }
    }
    if (lead < 0.0) u.col(j) = -u.col(j);
  }
}

Svd thin_svd(const Matrix& m) {
  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

TuckerDecomposition hosvd(const DenseTensor& t, const Dims& ranks) {
  const int d = t.order();
  if (static_cast<int>(ranks.size()) != d)
    throw std::invalid_argument("hosvd: rank list order mismatch");
  for (int i = 0; i < d; ++i) {
    Index r = ranks[static_cast<size_t>(i)];
    if (r < 1 || r > t.dim(i))
      throw std::invalid_argument("hosvd: rank must satisfy 1 <= r_i <= p_i");
  }

  TuckerDecomposition td;
  td.ranks = ranks;
  td.factors.resize(static_cast<size_t>(d));
  DenseTensor core = t;
  for (int i = 0; i < d; ++i) {
    Svd svd = thin_svd(matricize(t, {i}));
    Matrix u = svd.u.leftCols(ranks[static_cast<size_t>(i)]);
    fix_column_signs(u);
    td.factors[static_cast<size_t>(i)] = u;
    core = mode_product(core, u.transpose(), i);
  }
  td.core = std::move(core);
  return td;
}

Dims multilinear_ranks(const DenseTensor& t, double tol) {
  if (tol < 0) throw std::invalid_argument("multilinear_ranks: tol must be >= 0");
  const int d = t.order();
  Dims ranks(static_cast<size_t>(d), 0);
  for (int i = 0; i < d; ++i) {
    Vector sv = thin_svd(matricize(t, {i})).sigma;
    if (sv.size() == 0 || sv[0] <= 0.0) continue;
    const double cut = tol * sv[0];
    Index r = 0;
    for (Index j = 0; j < sv.size(); ++j)
      if (sv[j] > cut) ++r;
    ranks[static_cast<size_t>(i)] = r;
  }
  return ranks;
}

Matrix soft_threshold_svd(const Matrix& m, double tau) {
  if (tau < 0) throw std::invalid_argument("soft_threshold_svd: tau must be >= 0");
  if (tau == 0.0) return m;
  Svd svd = thin_svd(m);
  Vector sigma = (svd.sigma.array() - tau).max(0.0);
  return svd.u * sigma.asDiagonal() * svd.v.transpose();
}

double nuclear_norm(const Matrix& m) { return thin_svd(m).sigma.sum(); }

}  // namespace lrtar
