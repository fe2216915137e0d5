#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lrtar/least_squares.hpp"
#include "test_support.hpp"

#include <cmath>
#include <string>

using namespace lrtar;
using namespace test_support;

namespace {

// Noiseless design: generic Gaussian predictor rows, exact responses.
RegressionDesign noiseless_design(const DenseTensor& truth, const Dims& dims,
                                  Index t_count, std::uint64_t seed) {
  RegressionDesign design;
  design.dims = dims;
  const Index p = dims_product(dims);
  design.predictor = random_matrix(t_count, p, seed);
  Matrix a_s2 = matricize(truth, response_modes(static_cast<int>(dims.size())));
  design.response = design.predictor * a_s2.transpose();
  return design;
}

DenseTensor random_transition(const Dims& dims, std::uint64_t seed) {
  Dims full = dims;
  full.insert(full.end(), dims.begin(), dims.end());
  return random_tensor(full, seed);
}

}  // namespace

TEST_CASE("RegressionDesign::from_series lags correctly") {
  TensorSeries series;
  series.dims = {2};
  for (int t = 0; t < 4; ++t)
    series.push_back(DenseTensor({2}, Vector{{double(t), double(10 + t)}}));
  RegressionDesign design = RegressionDesign::from_series(series);
  CHECK(design.t_count() == 3);
  CHECK(design.p() == 2);
  CHECK(design.predictor(0, 0) == 0.0);
  CHECK(design.response(0, 0) == 1.0);
  CHECK(design.predictor(2, 1) == 12.0);
  CHECK(design.response(2, 1) == 13.0);
  CHECK(design.full_dims() == Dims{2, 2});
}

TEST_CASE("fit_ols") {
  Dims dims{2, 3};
  DenseTensor truth = random_transition(dims, 1);

  SUBCASE("recovers the truth on noiseless generic data") {
    RegressionDesign design = noiseless_design(truth, dims, 12, 2);
    FitReport fit = fit_ols(design);
    CHECK((fit.estimate - truth).norm() < 1e-8);
  }

  SUBCASE("identity dynamics give the identity transition tensor") {
    RegressionDesign design;
    design.dims = dims;
    design.predictor = random_matrix(12, 6, 3);
    design.response = design.predictor;
    Matrix b = matricize(fit_ols(design).estimate, response_modes(2));
    CHECK((b - Matrix::Identity(6, 6)).norm() < 1e-10);
  }

  SUBCASE("T < p reports the Gram rank deficiency") {
    RegressionDesign design = noiseless_design(truth, dims, 4, 4);
    CHECK_THROWS_WITH_AS(fit_ols(design),
                         doctest::Contains("singular Gram matrix"),
                         std::runtime_error);
  }

  SUBCASE("estimate is the loss minimizer under random perturbations") {
    RegressionDesign design = noiseless_design(truth, dims, 20, 5);
    design.response += 0.1 * random_matrix(20, 6, 6);  // make it nontrivial
    FitReport fit = fit_ols(design);
    const double at_fit = prediction_loss(design, fit.estimate);
    for (std::uint64_t s = 0; s < 100; ++s) {
      DenseTensor probe = fit.estimate + 1e-3 * random_transition(dims, 100 + s);
      CHECK(prediction_loss(design, probe) >= at_fit - 1e-14);
    }
  }
}

TEST_CASE("fit_rrr") {
  Dims dims{2, 3};

  SUBCASE("rank = p coincides with OLS") {
    DenseTensor truth = random_transition(dims, 10);
    RegressionDesign design = noiseless_design(truth, dims, 15, 11);
    design.response += 0.2 * random_matrix(15, 6, 12);
    CHECK((fit_rrr(design, 6).estimate - fit_ols(design).estimate).norm() <
          1e-10);
  }

  SUBCASE("exact recovery of a rank-2 truth from noiseless data") {
    Matrix a_s2 = random_matrix(6, 2, 13) * random_matrix(2, 6, 14);
    DenseTensor truth = dematricize(a_s2, {2, 3, 2, 3}, response_modes(2));
    RegressionDesign design = noiseless_design(truth, dims, 15, 15);
    FitReport fit = fit_rrr(design, 2);
    CHECK((fit.estimate - truth).norm() < 1e-8);
  }

  SUBCASE("rank-1 residual equals the discarded fitted-value energy") {
    Matrix a_s2 = random_matrix(6, 2, 16) * random_matrix(2, 6, 17);
    DenseTensor truth = dematricize(a_s2, {2, 3, 2, 3}, response_modes(2));
    RegressionDesign design = noiseless_design(truth, dims, 15, 18);
    FitReport fit = fit_rrr(design, 1);
    Matrix fitted = design.predictor *
                    matricize(fit_ols(design).estimate, response_modes(2)).transpose();
    Vector sigma = thin_svd(fitted).sigma;
    double discarded = sigma.tail(sigma.size() - 1).squaredNorm();
    CHECK(prediction_loss(design, fit.estimate) ==
          doctest::Approx(discarded / 15.0).epsilon(1e-8));
  }

  SUBCASE("beats the truncated-SVD-of-OLS competitor") {
    DenseTensor truth = random_transition(dims, 19);
    RegressionDesign design = noiseless_design(truth, dims, 25, 20);
    design.response += 0.5 * random_matrix(25, 6, 21);
    for (Index s : {1, 2, 3}) {
      FitReport fit = fit_rrr(design, s);
      Matrix b_ols = matricize(fit_ols(design).estimate, response_modes(2));
      Svd svd = thin_svd(b_ols);
      Matrix b_trunc = svd.u.leftCols(s) *
                       svd.sigma.head(s).asDiagonal() *
                       svd.v.leftCols(s).transpose();
      CHECK(prediction_loss(design, matricize(fit.estimate, response_modes(2))) <=
            prediction_loss(design, b_trunc) + 1e-10);
      CHECK(multilinear_ranks(fit.estimate).size() == 4);
      Svd check = thin_svd(matricize(fit.estimate, response_modes(2)));
      CHECK(check.sigma.tail(check.sigma.size() - s).norm() < 1e-10);
    }
  }
}

TEST_CASE("fit_ltr") {
  Dims dims{3, 3};
  Dims ranks{2, 2, 2, 2};

  SUBCASE("fixed point: init at the truth on noiseless data") {
    LrtarModel model = make_dgp(dims, ranks, 30);
    DenseTensor truth = model.transition();
    RegressionDesign design = noiseless_design(truth, dims, 40, 31);
    FitReport fit = fit_ltr(design, ranks, truth);
    CHECK(fit.converged);
    CHECK(fit.iterations <= 2);
    CHECK(fit.objective_trace.back() < 1e-10);
    CHECK((fit.estimate - truth).norm() < 1e-5 * truth.norm());
  }

  SUBCASE("objective trace nonincreasing per block on random instances") {
    for (std::uint64_t s = 0; s < 20; ++s) {
      LrtarModel model = make_dgp(dims, ranks, 40 + s);
      TensorSeries series = model.simulate(120, 200, 140 + s);
      RegressionDesign design = RegressionDesign::from_series(series);
      FitReport fit = fit_ltr(design, ranks);
      REQUIRE(fit.objective_trace.size() >= 2);
      for (size_t i = 1; i < fit.objective_trace.size(); ++i)
        CHECK(fit.objective_trace[i] <= fit.objective_trace[i - 1] + 1e-8);
    }
  }

  SUBCASE("output multilinear ranks bounded by the requested ranks") {
    LrtarModel model = make_dgp(dims, ranks, 60);
    TensorSeries series = model.simulate(200, 200, 61);
    RegressionDesign design = RegressionDesign::from_series(series);
    FitReport fit = fit_ltr(design, ranks);
    Dims measured = multilinear_ranks(fit.estimate, 1e-6);
    REQUIRE(measured.size() == 4);
    for (size_t i = 0; i < 4; ++i) CHECK(measured[i] <= ranks[i]);
    REQUIRE(fit.ranks.has_value());
    CHECK(*fit.ranks == ranks);
  }

  SUBCASE("terminal HOSVD normalization is idempotent") {
    LrtarModel model = make_dgp(dims, ranks, 70);
    TensorSeries series = model.simulate(200, 200, 71);
    FitReport fit = fit_ltr(RegressionDesign::from_series(series), ranks);
    TuckerDecomposition td = hosvd(fit.estimate, ranks);
    CHECK((td.reconstruct() - fit.estimate).norm() < 1e-8 * fit.estimate.norm());
  }

  SUBCASE("works when T < p via the regularized pilot") {
    LrtarModel model = make_dgp({4, 4}, {1, 1, 1, 1}, 80);
    TensorSeries series = model.simulate(12, 200, 81);  // T-1 = 11 < p = 16
    FitReport fit = fit_ltr(RegressionDesign::from_series(series), {1, 1, 1, 1});
    CHECK(fit.estimate.dims() == Dims{4, 4, 4, 4});
    CHECK(std::isfinite(fit.objective_trace.back()));
  }
}

TEST_CASE("asymptotic_covariance") {
  SUBCASE("symmetric PSD and full-rank reduction to the OLS covariance") {
    Dims dims{2};
    Matrix a = Matrix::Zero(2, 2);
    a << 0.5, 0.1, -0.2, 0.3;
    DenseTensor truth = dematricize(a, {2, 2}, {1});
    LrtarModel model(truth, Matrix::Identity(2, 2));
    TensorSeries series = model.simulate(500, 200, 90);
    RegressionDesign design = RegressionDesign::from_series(series);

    FitReport fit = fit_ols(design);
    TuckerDecomposition td = hosvd(fit.estimate, {2, 2});
    LrtarModel est(fit.estimate, Matrix::Identity(2, 2), td);
    Matrix sigma = asymptotic_covariance(est, design);

    CHECK((sigma - sigma.transpose()).norm() < 1e-10);
    Eigen::SelfAdjointEigenSolver<Matrix> es(sigma);
    CHECK(es.eigenvalues().minCoeff() > -1e-10);

    Matrix resid = design.response -
                   design.predictor * est.transition_matrix().transpose();
    Matrix sigma_e = resid.transpose() * resid / double(design.t_count());
    Matrix sigma_y = design.predictor.transpose() * design.predictor /
                     double(design.t_count());
    Matrix ols_cov = kron(sigma_e, sigma_y.inverse());
    CHECK((sigma - ols_cov).norm() < 1e-8 * ols_cov.norm());
  }

  SUBCASE("scalar AR(1) plug-in approaches 1 - a^2") {
    DenseTensor t({1, 1}, Vector::Constant(1, 0.5));
    LrtarModel model(t, Matrix::Identity(1, 1));
    TensorSeries series = model.simulate(50000, 200, 91);
    RegressionDesign design = RegressionDesign::from_series(series);
    FitReport fit = fit_ols(design);
    LrtarModel est(fit.estimate, Matrix::Identity(1, 1),
                   hosvd(fit.estimate, {1, 1}));
    Matrix sigma = asymptotic_covariance(est, design);
    REQUIRE(sigma.rows() == 1);
    CHECK(std::abs(sigma(0, 0) - 0.75) < 0.075);
  }

  SUBCASE("Tucker form is required") {
    DenseTensor t({1, 1}, Vector::Constant(1, 0.5));
    LrtarModel plain(t, Matrix::Identity(1, 1));
    RegressionDesign design;
    design.dims = {1};
    design.predictor = random_matrix(10, 1, 92);
    design.response = 0.5 * design.predictor;
    CHECK_THROWS_AS(asymptotic_covariance(plain, design), std::invalid_argument);
  }
}
