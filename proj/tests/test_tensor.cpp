#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lrtar/tensor.hpp"
#include "test_support.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace lrtar;
using namespace test_support;

namespace {

Dims random_small_dims(std::uint64_t seed, int max_order = 6) {
  std::mt19937_64 gen(seed);
  const int order = 1 + static_cast<int>(gen() % static_cast<unsigned>(max_order));
  Dims dims;
  for (int i = 0; i < order; ++i) dims.push_back(1 + static_cast<Index>(gen() % 4));
  return dims;
}

}  // namespace

TEST_CASE("DenseTensor storage is first-index-fastest") {
  DenseTensor t({2, 3});
  for (Index i = 0; i < 6; ++i) t[i] = static_cast<double>(i);
  Index idx01[] = {1, 1};
  CHECK(t.at(idx01) == 3.0);  // flat = i1 + 2*i2
  CHECK(t.dim(0) == 2);
  CHECK(t.size() == 6);
  CHECK_THROWS_AS(DenseTensor({2, 3}, Vector::Zero(5)), std::invalid_argument);
}

TEST_CASE("matricize of a matrix with row mode {1} is the transpose") {
  Matrix x = random_matrix(3, 4, 11);
  DenseTensor t({3, 4}, Eigen::Map<const Vector>(x.data(), 12));
  CHECK((matricize(t, {0}) - x).norm() == doctest::Approx(0.0));
  CHECK((matricize(t, {1}) - x.transpose()).norm() == doctest::Approx(0.0));
}

TEST_CASE("matricize matches the paper's index formulas on a 2x2x2 tensor") {
  // data k at flat position k, S = {1,3} in the paper's 1-based modes
  DenseTensor t({2, 2, 2});
  for (Index k = 0; k < 8; ++k) t[k] = static_cast<double>(k + 1);
  Matrix m = matricize(t, {0, 2});
  Dims idx = {0, 0, 0};
  do {
    // i = 1 + (i1-1) + (i3-1)*2, j = 1 + (i2-1), all 1-based
    const Index i = idx[0] + idx[2] * 2;
    const Index j = idx[1];
    CHECK(m(i, j) == t.at(std::span<const Index>(idx.data(), 3)));
  } while (next_index({2, 2, 2}, idx));
  CHECK((m - reference_matricize(t, {0, 2})).norm() == doctest::Approx(0.0));
}

TEST_CASE("matricize rejects invalid mode sets") {
  DenseTensor t = random_tensor({2, 3}, 5);
  CHECK_THROWS_AS(matricize(t, {2}), std::invalid_argument);
  CHECK_THROWS_AS(matricize(t, {-1}), std::invalid_argument);
  CHECK_THROWS_AS(matricize(t, {0, 0}), std::invalid_argument);
}

TEST_CASE("empty row set gives the vec row") {
  DenseTensor t = random_tensor({2, 3, 2}, 7);
  Matrix m = matricize(t, {});
  REQUIRE(m.rows() == 1);
  CHECK((m.transpose() - t.data()).norm() == doctest::Approx(0.0));
}

TEST_CASE("transpose duality over random tensors and subsets") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    DenseTensor t = random_tensor(random_small_dims(100 + s), 200 + s);
    for (const auto& subset : all_subsets(t.order())) {
      auto complement = complement_modes(t.order(), subset);
      CHECK((matricize(t, subset) - matricize(t, complement).transpose()).norm() <
            1e-14);
    }
  }
}

TEST_CASE("dematricize inverts matricize for every subset") {
  DenseTensor t = random_tensor({3, 4, 5}, 21);
  DenseTensor back = dematricize(matricize(t, {1}), t.dims(), {1});
  CHECK((back - t).norm() == doctest::Approx(0.0));

  DenseTensor cube = random_tensor({2, 2, 2}, 22);
  for (const auto& subset : all_subsets(3)) {
    DenseTensor rt = dematricize(matricize(cube, subset), cube.dims(), subset);
    CHECK((rt - cube).norm() == doctest::Approx(0.0));
  }
  CHECK_THROWS_AS(dematricize(Matrix::Zero(2, 2), {3, 4, 5}, {1}),
                  std::invalid_argument);
}

TEST_CASE("mode_product basics and oracle") {
  DenseTensor t = random_tensor({2, 3}, 31);
  CHECK((mode_product(t, Matrix::Identity(2, 2), 0) - t).norm() < 1e-14);

  // rank-1: (M u) outer v
  Vector u = random_vector(3, 32), v = random_vector(4, 33);
  DenseTensor ut({3}, u), vt({4}, v);
  DenseTensor uv = outer_product(ut, vt);
  Matrix m = random_matrix(5, 3, 34);
  DenseTensor muv = mode_product(uv, m, 0);
  DenseTensor expect = outer_product(DenseTensor({5}, m * u), vt);
  CHECK((muv - expect).norm() < 1e-12);

  // direct-sum oracle on a 2x3 tensor, 4x2 matrix, mode 0
  DenseTensor x = random_tensor({2, 3}, 35);
  Matrix y = random_matrix(4, 2, 36);
  DenseTensor z = mode_product(x, y, 0);
  for (Index j = 0; j < 4; ++j)
    for (Index c = 0; c < 3; ++c) {
      double sum = 0.0;
      for (Index i = 0; i < 2; ++i) {
        Index xi[] = {i, c};
        sum += x.at(xi) * y(j, i);
      }
      Index zi[] = {j, c};
      CHECK(z.at(zi) == doctest::Approx(sum).epsilon(1e-12));
    }
  CHECK((matricize(z, {0}) - y * matricize(x, {0})).norm() < 1e-12);
  CHECK_THROWS_AS(mode_product(x, Matrix::Zero(2, 5), 0), std::invalid_argument);
}

TEST_CASE("generalized inner product") {
  SUBCASE("equal orders reduce to the Frobenius inner product") {
    DenseTensor x = random_tensor({2, 3, 2}, 41);
    DenseTensor y = random_tensor({2, 3, 2}, 42);
    CHECK(inner_scalar(x, y) ==
          doctest::Approx(x.data().dot(y.data())).epsilon(1e-12));
  }
  SUBCASE("identity transition tensor acts as the identity") {
    DenseTensor a({2, 3, 2, 3});
    Dims idx = {0, 0, 0, 0};
    do {
      if (idx[0] == idx[2] && idx[1] == idx[3])
        a.at(std::span<const Index>(idx.data(), 4)) = 1.0;
    } while (next_index(a.dims(), idx));
    DenseTensor y = random_tensor({2, 3}, 43);
    CHECK((generalized_inner(a, y) - y).norm() < 1e-14);
  }
  SUBCASE("triple-loop oracle for a 2x2x3 against a 2x2 tensor") {
    DenseTensor x = random_tensor({2, 2, 3}, 44);
    DenseTensor y = random_tensor({2, 2}, 45);
    DenseTensor z = generalized_inner(x, y);
    REQUIRE(z.dims() == Dims{3});
    for (Index k = 0; k < 3; ++k) {
      double sum = 0.0;
      for (Index i = 0; i < 2; ++i)
        for (Index j = 0; j < 2; ++j) {
          Index xi[] = {i, j, k};
          Index yi[] = {i, j};
          sum += x.at(xi) * y.at(yi);
        }
      CHECK(z[k] == doctest::Approx(sum).epsilon(1e-12));
    }
  }
  SUBCASE("vec identity vec(<x,y>) = x_[S] vec(y)") {
    DenseTensor x = random_tensor({2, 3, 4, 2}, 46);
    DenseTensor y = random_tensor({2, 3}, 47);
    DenseTensor z = generalized_inner(x, y);
    Vector direct = matricize(x, {2, 3}) * y.data();
    CHECK((z.data() - direct).norm() < 1e-12);
  }
  SUBCASE("leading-dimension mismatch throws") {
    CHECK_THROWS_AS(
        generalized_inner(random_tensor({2, 3}, 48), random_tensor({3}, 49)),
        std::invalid_argument);
  }
}

TEST_CASE("outer product") {
  DenseTensor e1({2}, Vector::Unit(2, 0)), e2({3}, Vector::Unit(3, 1));
  DenseTensor m = outer_product(e1, e2);
  REQUIRE(m.dims() == Dims{2, 3});
  Index at01[] = {0, 1};
  CHECK(m.at(at01) == 1.0);
  CHECK(m.norm() == doctest::Approx(1.0));

  Vector u = random_vector(2, 51), v = random_vector(3, 52);
  DenseTensor uv = outer_product(DenseTensor({2}, u), DenseTensor({3}, v));
  for (Index i = 0; i < 2; ++i)
    for (Index j = 0; j < 3; ++j) {
      Index idx[] = {i, j};
      CHECK(uv.at(idx) == doctest::Approx(u[i] * v[j]).epsilon(1e-14));
    }
}

TEST_CASE("mode-product / inner-product exchange identities") {
  // <X x_k Y, Z> = <X, Z x_k Y^T> for k within the contracted modes
  DenseTensor x = random_tensor({2, 3, 5}, 61);
  Matrix y = random_matrix(4, 2, 62);
  DenseTensor z = random_tensor({4, 3}, 63);
  DenseTensor lhs = generalized_inner(mode_product(x, y, 0), z);
  DenseTensor rhs = generalized_inner(x, mode_product(z, y.transpose(), 0));
  CHECK((lhs - rhs).norm() < 1e-12);

  // <X, Y> x_j Z = <X x_{m+j} Z, Y>
  DenseTensor x2 = random_tensor({2, 3, 4, 5}, 64);
  DenseTensor y2 = random_tensor({2, 3}, 65);
  Matrix zmat = random_matrix(6, 4, 66);
  DenseTensor lhs2 = mode_product(generalized_inner(x2, y2), zmat, 0);
  DenseTensor rhs2 = generalized_inner(mode_product(x2, zmat, 2), y2);
  CHECK((lhs2 - rhs2).norm() < 1e-12);
}

TEST_CASE("Kronecker identity for Tucker-tensor matricizations") {
  Dims dims = {3, 4, 5}, ranks = {2, 2, 3};
  TuckerDecomposition td;
  td.ranks = ranks;
  td.core = random_tensor(ranks, 71);
  for (size_t i = 0; i < dims.size(); ++i)
    td.factors.push_back(random_frame(dims[i], ranks[i], 72 + i));
  DenseTensor x = td.reconstruct();

  for (const auto& subset : all_subsets(3)) {
    std::vector<Matrix> in_s, out_s;
    for (int k = 0; k < 3; ++k) {
      bool inside = std::find(subset.begin(), subset.end(), k) != subset.end();
      (inside ? in_s : out_s).push_back(td.factors[static_cast<size_t>(k)]);
    }
    Matrix lhs = matricize(x, subset);
    Matrix rhs = kron_reverse(in_s) * matricize(td.core, subset) *
                 kron_reverse(out_s).transpose();
    CHECK((lhs - rhs).norm() < 1e-10);
  }
}

TEST_CASE("Frobenius norm equals singular value energy of every unfolding") {
  DenseTensor t = random_tensor({3, 4, 2}, 81);
  const double f2 = t.norm() * t.norm();
  for (int k = 0; k < 3; ++k) {
    Vector sigma = thin_svd(matricize(t, {k})).sigma;
    CHECK(sigma.squaredNorm() == doctest::Approx(f2).epsilon(1e-12));
  }
}

TEST_CASE("kron and kron_reverse conventions") {
  Matrix a = random_matrix(2, 3, 91), b = random_matrix(4, 2, 92);
  Matrix k = kron(a, b);
  REQUIRE(k.rows() == 8);
  REQUIRE(k.cols() == 6);
  CHECK(k(0, 0) == doctest::Approx(a(0, 0) * b(0, 0)));
  CHECK(k(7, 5) == doctest::Approx(a(1, 2) * b(3, 1)));
  // reverse order: back() kron ... kron front()
  CHECK((kron_reverse({a, b}) - kron(b, a)).norm() == doctest::Approx(0.0));
  CHECK((kron_reverse({}) - Matrix::Identity(1, 1)).norm() == doctest::Approx(0.0));
  // vec(B X A^T) = (A kron B) vec(X)
  Matrix x = random_matrix(2, 3, 93);
  Matrix y = b * x * a.transpose();
  Vector lhs = Eigen::Map<const Vector>(y.data(), y.size());
  Vector rhs = kron(a, b) * Eigen::Map<const Vector>(x.data(), x.size());
  CHECK((lhs - rhs).norm() < 1e-12);
}

TEST_CASE("unfolding permutation maps") {
  DenseTensor t = random_tensor({2, 3, 4}, 95);
  for (int k = 0; k < 3; ++k) {
    Matrix unf = matricize(t, {k});
    auto perm = unfolding_perm(t.dims(), k);
    for (Index v = 0; v < t.size(); ++v)
      CHECK(unf(v % unf.rows(), v / unf.rows()) == t[perm[static_cast<size_t>(v)]]);
  }
  // composition into a multi-mode matricization
  std::vector<int> rows = {0, 2};
  Matrix ms = matricize(t, rows);
  for (int k = 0; k < 3; ++k) {
    Matrix unf = matricize(t, {k});
    auto perm = unfold_to_matricization_perm(t.dims(), k, rows);
    for (Index v = 0; v < t.size(); ++v) {
      const Index pos = perm[static_cast<size_t>(v)];
      CHECK(ms(pos % ms.rows(), pos / ms.rows()) ==
            unf(v % unf.rows(), v / unf.rows()));
    }
  }
}
