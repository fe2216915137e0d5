#pragma once

#include "lrtar/rng.hpp"
#include "lrtar/tensor.hpp"
#include "lrtar/tucker.hpp"

#include <cstdint>
#include <vector>

namespace test_support {

using namespace lrtar;

inline DenseTensor random_tensor(const Dims& dims, std::uint64_t seed) {
  NormalSampler normal(seed);
  DenseTensor t(dims);
  for (Index i = 0; i < t.size(); ++i) t[i] = normal();
  return t;
}

inline Matrix random_matrix(Index rows, Index cols, std::uint64_t seed) {
  NormalSampler normal(seed);
  Matrix m(rows, cols);
  for (Index c = 0; c < cols; ++c)
    for (Index r = 0; r < rows; ++r) m(r, c) = normal();
  return m;
}

inline Vector random_vector(Index n, std::uint64_t seed) {
  NormalSampler normal(seed);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = normal();
  return v;
}

// Orthonormal p x r frame from a Gaussian matrix, sign-normalized.
inline Matrix random_frame(Index p, Index r, std::uint64_t seed) {
  Matrix u = thin_svd(random_matrix(p, p, seed)).u.leftCols(r);
  fix_column_signs(u);
  return u;
}

// Tensor with exact multilinear ranks (generic Gaussian core).
inline DenseTensor random_tucker_tensor(const Dims& dims, const Dims& ranks,
                                        std::uint64_t seed) {
  TuckerDecomposition td;
  td.ranks = ranks;
  td.core = random_tensor(ranks, mix_seed(seed, 0));
  for (size_t i = 0; i < dims.size(); ++i)
    td.factors.push_back(random_frame(dims[i], ranks[i],
                                      mix_seed(seed, 1 + static_cast<std::uint64_t>(i))));
  return td.reconstruct();
}

// Odometer over all index tuples of the given dims.
inline bool next_index(const Dims& dims, Dims& idx) {
  for (size_t k = 0; k < dims.size(); ++k) {
    if (++idx[k] < dims[k]) return true;
    idx[k] = 0;
  }
  return false;
}

// Independent matricization oracle: the paper's 1-based row/column formulas
// evaluated elementwise.
inline Matrix reference_matricize(const DenseTensor& t,
                                  const std::vector<int>& row_modes) {
  const Dims& dims = t.dims();
  std::vector<bool> in_rows(dims.size(), false);
  for (int m : row_modes) in_rows[static_cast<size_t>(m)] = true;
  Index row_dim = 1, col_dim = 1;
  for (size_t k = 0; k < dims.size(); ++k)
    (in_rows[k] ? row_dim : col_dim) *= dims[k];

  Matrix out = Matrix::Zero(row_dim, col_dim);
  Dims idx(dims.size(), 0);
  if (t.size() == 0) return out;
  do {
    Index row = 0, col = 0, rstride = 1, cstride = 1;
    for (size_t k = 0; k < dims.size(); ++k) {
      if (in_rows[k]) {
        row += idx[k] * rstride;
        rstride *= dims[k];
      } else {
        col += idx[k] * cstride;
        cstride *= dims[k];
      }
    }
    out(row, col) = t.at(std::span<const Index>(idx.data(), idx.size()));
  } while (next_index(dims, idx));
  return out;
}

inline std::vector<std::vector<int>> all_subsets(int order) {
  std::vector<std::vector<int>> subsets;
  for (int mask = 0; mask < (1 << order); ++mask) {
    std::vector<int> s;
    for (int k = 0; k < order; ++k)
      if (mask & (1 << k)) s.push_back(k);
    subsets.push_back(std::move(s));
  }
  return subsets;
}

}  // namespace test_support
