#include "lrtar/least_squares.hpp"

#include "lrtar/regularized.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace lrtar {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Throws if X^T X is rank deficient; returns the factorized Gram matrix.
Eigen::LDLT<Matrix> checked_gram(const Matrix& x) {
  Matrix gram = x.transpose() * x;
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
  const double max_eig = es.eigenvalues().maxCoeff();
  Index rank = 0;
  for (Index i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()[i] > 1e-12 * std::max(max_eig, 0.0)) ++rank;
  if (rank < gram.rows())
    throw std::runtime_error("singular Gram matrix: rank " + std::to_string(rank) +
                             " of " + std::to_string(gram.rows()) +
                             " (need T >= p with generic data)");
  return gram.ldlt();
}

Matrix ols_matrix(const RegressionDesign& design) {
  auto ldlt = checked_gram(design.predictor);
  // B solves B (X^T X) = Y^T X, so B^T = (X^T X)^{-1} X^T Y.
  return ldlt.solve(design.predictor.transpose() * design.response).transpose();
}

}  // namespace

RegressionDesign RegressionDesign::from_series(const TensorSeries& series) {
  if (series.length() < 2)
    throw std::invalid_argument("RegressionDesign: need at least 2 observations");
  Matrix all = series.to_matrix();
  RegressionDesign d;
  d.response = all.bottomRows(all.rows() - 1);
  d.predictor = all.topRows(all.rows() - 1);
  d.dims = series.dims;
  return d;
}

Dims RegressionDesign::full_dims() const {
  Dims out = dims;
  out.insert(out.end(), dims.begin(), dims.end());
  return out;
}

double prediction_loss(const RegressionDesign& design, const Matrix& b_s2) {
  return (design.response - design.predictor * b_s2.transpose()).squaredNorm() /
         static_cast<double>(design.t_count());
}

double prediction_loss(const RegressionDesign& design, const DenseTensor& estimate) {
  return prediction_loss(design, matricize(estimate, response_modes(design.d())));
}

FitReport fit_ols(const RegressionDesign& design) {
  const auto start = Clock::now();
  Matrix b = ols_matrix(design);
  FitReport report;
  report.estimate = dematricize(b, design.full_dims(), response_modes(design.d()));
  report.objective_trace = {prediction_loss(design, b)};
  report.iterations = 1;
  report.converged = true;
  report.elapsed_s = seconds_since(start);
  return report;
}

FitReport fit_rrr(const RegressionDesign& design, Index rank) {
  if (rank < 1 || rank > design.p())
    throw std::invalid_argument("fit_rrr: rank must satisfy 1 <= s <= p");
  const auto start = Clock::now();
  Matrix b_ols = ols_matrix(design);
  Matrix fitted = design.predictor * b_ols.transpose();  // T x p
  // Project responses onto the top-rank singular directions of the fitted
  // values (identity error weighting).
  Matrix v = thin_svd(fitted).v.leftCols(rank);
  Matrix b = v * (v.transpose() * b_ols);
  FitReport report;
  report.estimate = dematricize(b, design.full_dims(), response_modes(design.d()));
  report.objective_trace = {prediction_loss(design, b)};
  report.iterations = 1;
  report.converged = true;
  report.elapsed_s = seconds_since(start);
  return report;
}

namespace {

struct AlsState {
  DenseTensor core;             // dims = ranks (order 2d)
  std::vector<Matrix> factors;  // 2d factors, i-th p_i x r_i

  Matrix transition_matrix(int d) const {
    std::vector<Matrix> pred(factors.begin(), factors.begin() + d);
    std::vector<Matrix> resp(factors.begin() + d, factors.end());
    Matrix gmat = matricize(core, response_modes(d));
    return kron_reverse(resp) * gmat * kron_reverse(pred).transpose();
  }
};

// Solves the ridge-regularized normal equations N u = rhs.
Vector ridge_solve(Matrix n, const Vector& rhs, double ridge) {
  n.diagonal().array() += ridge;
  return n.ldlt().solve(rhs);
}

}  // namespace

FitReport fit_ltr(const RegressionDesign& design, const Dims& ranks,
                  const std::optional<DenseTensor>& init, const AlsOptions& opts) {
  const auto start = Clock::now();
  const int d = design.d();
  const Dims full = design.full_dims();
  if (static_cast<int>(ranks.size()) != 2 * d)
    throw std::invalid_argument("fit_ltr: need 2d ranks");
  for (int i = 0; i < 2 * d; ++i)
    if (ranks[static_cast<size_t>(i)] < 1 ||
        ranks[static_cast<size_t>(i)] > full[static_cast<size_t>(i)])
      throw std::invalid_argument("fit_ltr: invalid rank");

  const Matrix& x = design.predictor;
  const Matrix& y = design.response;
  const Index t_count = design.t_count();
  const Index p = design.p();

  Index r_pred = 1, r_resp = 1;
  for (int i = 0; i < d; ++i) r_pred *= ranks[static_cast<size_t>(i)];
  for (int i = 0; i < d; ++i) r_resp *= ranks[static_cast<size_t>(d + i)];

  DenseTensor a0;
  if (init) {
    if (init->dims() != full) throw std::invalid_argument("fit_ltr: init shape mismatch");
    a0 = *init;
  } else {
    try {
      a0 = fit_rrr(design, std::min(r_pred, r_resp)).estimate;
    } catch (const std::runtime_error&) {
      // T < p: fall back to a nuclear-norm regularized pilot estimate.
      RegOptions pilot;
      pilot.lambda = 0.1 * ssn_lambda_max(design) * std::pow(2.0, d - 1);
      a0 = fit_mn(design, pilot).estimate;
    }
  }

  TuckerDecomposition td = hosvd(a0, ranks);
  AlsState state{td.core, td.factors};

  const Dims rdims1(ranks.begin(), ranks.begin() + d);
  const Dims rdims2(ranks.begin() + d, ranks.end());

  std::vector<DenseTensor> x_tensors;
  x_tensors.reserve(static_cast<size_t>(t_count));
  for (Index t = 0; t < t_count; ++t)
    x_tensors.emplace_back(design.dims, x.row(t).transpose());

  FitReport report;
  report.ranks = ranks;
  double obj = prediction_loss(design, state.transition_matrix(d));
  report.objective_trace.push_back(obj);

  int sweep = 0;
  bool converged = false;
  for (; sweep < opts.max_iter && !converged; ++sweep) {
    const double obj_sweep_start = obj;

    // Predictor factor updates.
    for (int k = 0; k < d; ++k) {
      const Index rk = ranks[static_cast<size_t>(k)];
      const Index pk = design.dims[static_cast<size_t>(k)];
      const Index r_rest = r_pred / rk;

      std::vector<Matrix> resp(state.factors.begin() + d, state.factors.end());
      Matrix q0 = kron_reverse(resp) * matricize(state.core, response_modes(d));
      auto perm = unfolding_perm(rdims1, k);
      // Column a + rk*b of the permuted map, gathered per slice a.
      std::vector<Matrix> q_slices(static_cast<size_t>(rk), Matrix(p, r_rest));
      for (Index a = 0; a < rk; ++a)
        for (Index b = 0; b < r_rest; ++b)
          q_slices[static_cast<size_t>(a)].col(b) =
              q0.col(perm[static_cast<size_t>(a + rk * b)]);

      Matrix normal = Matrix::Zero(pk * rk, pk * rk);
      Vector rhs = Vector::Zero(pk * rk);
      Matrix design_t(p, pk * rk);
      for (Index t = 0; t < t_count; ++t) {
        DenseTensor z = x_tensors[static_cast<size_t>(t)];
        for (int i = 0; i < d; ++i)
          if (i != k)
            z = mode_product(z, state.factors[static_cast<size_t>(i)].transpose(), i);
        Matrix zk = matricize(z, {k});  // pk x r_rest
        for (Index a = 0; a < rk; ++a)
          design_t.middleCols(a * pk, pk) =
              q_slices[static_cast<size_t>(a)] * zk.transpose();
        normal.noalias() += design_t.transpose() * design_t;
        rhs.noalias() += design_t.transpose() * y.row(t).transpose();
      }
      Vector u = ridge_solve(normal, rhs, opts.ridge);
      state.factors[static_cast<size_t>(k)] =
          Eigen::Map<const Matrix>(u.data(), pk, rk);

      obj = prediction_loss(design, state.transition_matrix(d));
      report.objective_trace.push_back(obj);
    }

    // Response factor updates.
    for (int k = 0; k < d; ++k) {
      const Index rk = ranks[static_cast<size_t>(d + k)];
      const Index pk = design.dims[static_cast<size_t>(k)];
      const Index p_rest = p / pk;
      auto perm = unfolding_perm(design.dims, k);

      Matrix normal = Matrix::Zero(pk * rk, pk * rk);
      Vector rhs = Vector::Zero(pk * rk);
      Matrix design_t = Matrix::Zero(p, pk * rk);
      for (Index t = 0; t < t_count; ++t) {
        DenseTensor proj = x_tensors[static_cast<size_t>(t)];
        for (int i = 0; i < d; ++i)
          proj = mode_product(proj, state.factors[static_cast<size_t>(i)].transpose(), i);
        DenseTensor m = generalized_inner(state.core, proj);  // dims rdims2
        DenseTensor w = m;
        for (int i = 0; i < d; ++i)
          if (i != k)
            w = mode_product(w, state.factors[static_cast<size_t>(d + i)], i);
        Matrix wk = matricize(w, {k});  // rk x p_rest
        design_t.setZero();
        for (Index j = 0; j < p_rest; ++j)
          for (Index a = 0; a < rk; ++a) {
            const double val = wk(a, j);
            for (Index c = 0; c < pk; ++c)
              design_t(perm[static_cast<size_t>(c + pk * j)], c + pk * a) = val;
          }
        normal.noalias() += design_t.transpose() * design_t;
        rhs.noalias() += design_t.transpose() * y.row(t).transpose();
      }
      Vector u = ridge_solve(normal, rhs, opts.ridge);
      state.factors[static_cast<size_t>(d + k)] =
          Eigen::Map<const Matrix>(u.data(), pk, rk);

      obj = prediction_loss(design, state.transition_matrix(d));
      report.objective_trace.push_back(obj);
    }

    // Core update: exact least squares via the Kronecker-factored normal
    // equations (Bout^T Bout) G (sum w w^T) = Bout^T sum y w^T.
    {
      std::vector<Matrix> pred(state.factors.begin(), state.factors.begin() + d);
      std::vector<Matrix> resp(state.factors.begin() + d, state.factors.end());
      Matrix ks1 = kron_reverse(pred);   // p x r_pred
      Matrix bout = kron_reverse(resp);  // p x r_resp
      Matrix wm = x * ks1;               // T x r_pred

      Matrix lhs_left = bout.transpose() * bout;
      lhs_left.diagonal().array() += opts.ridge;
      Matrix lhs_right = wm.transpose() * wm;
      lhs_right.diagonal().array() += opts.ridge;
      Matrix c1 = bout.transpose() * (y.transpose() * wm);  // r_resp x r_pred
      Matrix m1 = lhs_left.ldlt().solve(c1);
      Matrix gmat = lhs_right.ldlt().solve(m1.transpose()).transpose();
      state.core = dematricize(gmat, ranks, response_modes(d));

      obj = prediction_loss(design, state.transition_matrix(d));
      report.objective_trace.push_back(obj);
    }

    const double denom = std::max(obj_sweep_start, 1e-15);
    if (std::abs(obj_sweep_start - obj) / denom < opts.tol) converged = true;
  }

  DenseTensor a = dematricize(state.transition_matrix(d), full, response_modes(d));
  // Identifiability is restored only here, by the terminal HOSVD.
  report.estimate = hosvd(a, ranks).reconstruct();
  report.iterations = sweep;
  report.converged = converged;
  report.elapsed_s = seconds_since(start);
  return report;
}

Matrix asymptotic_covariance(const LrtarModel& estimate,
                             const RegressionDesign& design) {
  if (!estimate.tucker())
    throw std::invalid_argument("asymptotic_covariance: Tucker form required");
  const int d2 = estimate.transition().order();
  const int d = d2 / 2;
  const Index p = design.p();
  const Index t_count = design.t_count();
  const Dims full = design.full_dims();

  Matrix resid = design.response -
                 design.predictor * estimate.transition_matrix().transpose();
  Matrix sigma_e = resid.transpose() * resid / static_cast<double>(t_count);
  Matrix sigma_y = design.predictor.transpose() * design.predictor /
                   static_cast<double>(t_count);

  for (const Matrix* s : {&sigma_e, &sigma_y}) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(*s);
    if (es.eigenvalues().minCoeff() <= 0.0)
      throw std::runtime_error(
          "asymptotic_covariance: plug-in covariance not positive definite "
          "(min eigenvalue " + std::to_string(es.eigenvalues().minCoeff()) + ")");
  }

  const auto& tucker = *estimate.tucker();
  const Dims& ranks = tucker.ranks;
  Index rank_total = dims_product(ranks);
  Index width = rank_total;
  for (int i = 0; i < d2; ++i)
    width += full[static_cast<size_t>(i)] * ranks[static_cast<size_t>(i)];

  const auto s1 = predictor_modes(d);
  Matrix h = Matrix::Zero(p * p, width);

  // Core block: vec(A_[S1]) = (KS2 kron KS1) vec(G_[S1]).
  std::vector<Matrix> pred(tucker.factors.begin(), tucker.factors.begin() + d);
  std::vector<Matrix> resp(tucker.factors.begin() + d, tucker.factors.end());
  h.leftCols(rank_total) = kron(kron_reverse(resp), kron_reverse(pred));

  Index col = rank_total;
  for (int i = 0; i < d2; ++i) {
    const Index pi = full[static_cast<size_t>(i)];
    const Index ri = ranks[static_cast<size_t>(i)];
    std::vector<Matrix> others;
    for (int j = 0; j < d2; ++j)
      if (j != i) others.push_back(tucker.factors[static_cast<size_t>(j)]);
    Matrix gi = matricize(tucker.core, {i});  // ri x (R/ri)
    Matrix blk = kron(kron_reverse(others) * gi.transpose(), Matrix::Identity(pi, pi));
    auto perm = unfold_to_matricization_perm(full, i, s1);
    for (Index v = 0; v < p * p; ++v)
      h.block(perm[static_cast<size_t>(v)], col, 1, pi * ri) = blk.row(v);
    col += pi * ri;
  }

  Matrix j = kron(sigma_e.llt().solve(Matrix::Identity(p, p)), sigma_y);
  Matrix inner = h.transpose() * j * h;
  Eigen::SelfAdjointEigenSolver<Matrix> es(inner);
  const double cutoff = 1e-10 * std::max(es.eigenvalues().maxCoeff(), 0.0);
  Vector inv_eigs = Vector::Zero(es.eigenvalues().size());
  for (Index i = 0; i < inv_eigs.size(); ++i)
    if (es.eigenvalues()[i] > cutoff) inv_eigs[i] = 1.0 / es.eigenvalues()[i];
  Matrix pinv = es.eigenvectors() * inv_eigs.asDiagonal() * es.eigenvectors().transpose();
  Matrix sigma = h * pinv * h.transpose();
  return 0.5 * (sigma + sigma.transpose());
}

}  // namespace lrtar
