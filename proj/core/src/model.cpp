#include "lrtar/model.hpp"

#include "lrtar/rng.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

namespace lrtar {

std::vector<int> predictor_modes(int d) {
  std::vector<int> out(static_cast<size_t>(d));
  for (int i = 0; i < d; ++i) out[static_cast<size_t>(i)] = i;
  return out;
}

std::vector<int> response_modes(int d) {
  std::vector<int> out(static_cast<size_t>(d));
  for (int i = 0; i < d; ++i) out[static_cast<size_t>(i)] = d + i;
  return out;
}

void TensorSeries::push_back(DenseTensor t) {
  if (t.dims() != dims)
    throw std::invalid_argument("TensorSeries: observation shape mismatch");
  observations.push_back(std::move(t));
}

Matrix TensorSeries::to_matrix() const {
  const Index p = dims_product(dims);
  Matrix m(length(), p);
  for (Index t = 0; t < length(); ++t)
    m.row(t) = observations[static_cast<size_t>(t)].data().transpose();
  return m;
}

TensorSeries TensorSeries::from_matrix(const Matrix& m, const Dims& dims) {
  if (m.cols() != dims_product(dims))
    throw std::invalid_argument("TensorSeries: column count does not match dims");
  TensorSeries s;
  s.dims = dims;
  s.observations.reserve(static_cast<size_t>(m.rows()));
  for (Index t = 0; t < m.rows(); ++t)
    s.observations.emplace_back(dims, m.row(t).transpose());
  return s;
}

LrtarModel::LrtarModel(DenseTensor transition, Matrix noise_cov,
                       std::optional<TuckerDecomposition> tucker)
    : transition_(std::move(transition)),
      noise_cov_(std::move(noise_cov)),
      tucker_(std::move(tucker)) {
  const int order = transition_.order();
  if (order < 2 || order % 2 != 0)
    throw std::invalid_argument("LrtarModel: transition must have even order 2d");
  d_ = order / 2;
  for (int i = 0; i < d_; ++i)
    if (transition_.dim(i) != transition_.dim(d_ + i))
      throw std::invalid_argument("LrtarModel: transition is not balanced");
  p_ = 1;
  for (int i = 0; i < d_; ++i) p_ *= transition_.dim(i);

  if (noise_cov_.rows() != p_ || noise_cov_.cols() != p_)
    throw std::invalid_argument("LrtarModel: noise covariance must be p x p");
  if ((noise_cov_ - noise_cov_.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument("LrtarModel: noise covariance must be symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(noise_cov_);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw std::invalid_argument("LrtarModel: noise covariance must be positive definite");
  noise_cov_sqrt_ = es.operatorSqrt();

  if (tucker_) {
    DenseTensor rec = tucker_->reconstruct();
    double denom = std::max(transition_.norm(), 1.0);
    if ((rec - transition_).norm() > 1e-10 * denom)
      throw std::invalid_argument("LrtarModel: Tucker form does not reconstruct transition");
  }

  transition_matrix_ = matricize(transition_, response_modes(d_));
}

Dims LrtarModel::obs_dims() const {
  return Dims(transition_.dims().begin(), transition_.dims().begin() + d_);
}

double LrtarModel::spectral_radius() const {
  Eigen::EigenSolver<Matrix> es(transition_matrix_, /*computeEigenvectors=*/false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

DenseTensor LrtarModel::conditional_mean(const DenseTensor& y_prev) const {
  if (y_prev.dims() != obs_dims())
    throw std::invalid_argument("conditional_mean: state shape mismatch");
  return generalized_inner(transition_, y_prev);
}

TensorSeries LrtarModel::simulate(Index t_count, Index burn_in,
                                  std::uint64_t seed) const {
  if (t_count < 1) throw std::invalid_argument("simulate: T must be >= 1");
  if (burn_in < 0) throw std::invalid_argument("simulate: burn_in must be >= 0");
  if (spectral_radius() >= 1.0)
    throw std::invalid_argument("simulate: model is not stationary");

  NormalSampler normal(mix_seed(seed, 0));
  TensorSeries series;
  series.dims = obs_dims();
  series.observations.reserve(static_cast<size_t>(t_count));

  Vector y = Vector::Zero(p_);
  Vector xi(p_);
  for (Index t = 0; t < burn_in + t_count; ++t) {
    for (Index i = 0; i < p_; ++i) xi[i] = normal();
    y = transition_matrix_ * y + noise_cov_sqrt_ * xi;
    if (t >= burn_in) series.observations.emplace_back(series.dims, y);
  }
  return series;
}

LrtarModel make_dgp(const Dims& dims, const Dims& ranks, std::uint64_t seed) {
  const int d = static_cast<int>(dims.size());
  if (static_cast<int>(ranks.size()) != 2 * d)
    throw std::invalid_argument("make_dgp: need 2d ranks");
  Dims full_dims = dims;
  full_dims.insert(full_dims.end(), dims.begin(), dims.end());
  for (int i = 0; i < 2 * d; ++i) {
    if (ranks[static_cast<size_t>(i)] < 1 ||
        ranks[static_cast<size_t>(i)] > full_dims[static_cast<size_t>(i)])
      throw std::invalid_argument("make_dgp: ranks must satisfy 1 <= r_i <= p_i");
  }

  const Index p = dims_product(dims);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const std::uint64_t sub = mix_seed(seed, static_cast<std::uint64_t>(attempt));

    NormalSampler core_normal(mix_seed(sub, 1));
    DenseTensor core(ranks);
    for (Index i = 0; i < core.size(); ++i) core[i] = core_normal();
    core *= 5.0 / core.norm();

    std::vector<Matrix> factors(static_cast<size_t>(2 * d));
    for (int i = 0; i < 2 * d; ++i) {
      const Index pi = full_dims[static_cast<size_t>(i)];
      NormalSampler fnormal(mix_seed(sub, 2 + static_cast<std::uint64_t>(i)));
      Matrix g(pi, pi);
      for (Index c = 0; c < pi; ++c)
        for (Index r = 0; r < pi; ++r) g(r, c) = fnormal();
      Matrix u = thin_svd(g).u.leftCols(ranks[static_cast<size_t>(i)]);
      fix_column_signs(u);
      factors[static_cast<size_t>(i)] = std::move(u);
    }

    TuckerDecomposition td{core, factors, ranks};
    DenseTensor transition = td.reconstruct();
    LrtarModel model(std::move(transition), Matrix::Identity(p, p), std::move(td));
    if (model.spectral_radius() < 1.0) return model;
  }
  throw std::runtime_error("make_dgp: no stationary draw within 1000 attempts");
}

long long param_count(const Dims& dims, const Dims& ranks) {
  const int d = static_cast<int>(dims.size());
  if (static_cast<int>(ranks.size()) != 2 * d)
    throw std::invalid_argument("param_count: need 2d ranks");
  long long core = 1;
  for (Index r : ranks) core *= static_cast<long long>(r);
  long long total = core;
  for (int i = 0; i < d; ++i) {
    const long long pi = static_cast<long long>(dims[static_cast<size_t>(i)]);
    const long long ri = static_cast<long long>(ranks[static_cast<size_t>(i)]);
    const long long rdi = static_cast<long long>(ranks[static_cast<size_t>(d + i)]);
    total += ri * (pi - ri) + rdi * (pi - rdi);
  }
  return total;
}

}  // namespace lrtar
