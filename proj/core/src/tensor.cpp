#include "lrtar/tensor.hpp"

#include <algorithm>
#include <stdexcept>

namespace lrtar {

Index dims_product(const Dims& dims) {
  Index n = 1;
  for (Index d : dims) n *= d;
  return n;
}

DenseTensor::DenseTensor(Dims dims) : dims_(std::move(dims)) {
  for (Index d : dims_)
    if (d < 1) throw std::invalid_argument("DenseTensor: dimensions must be >= 1");
  data_ = Vector::Zero(dims_product(dims_));
}

DenseTensor::DenseTensor(Dims dims, Vector data)
    : dims_(std::move(dims)), data_(std::move(data)) {
  for (Index d : dims_)
    if (d < 1) throw std::invalid_argument("DenseTensor: dimensions must be >= 1");
  if (data_.size() != dims_product(dims_))
    throw std::invalid_argument("DenseTensor: data length does not match dims");
}

Index DenseTensor::flat_index(std::span<const Index> idx) const {
  if (static_cast<int>(idx.size()) != order())
    throw std::invalid_argument("DenseTensor: index order mismatch");
  Index f = 0;
  Index stride = 1;
  for (int k = 0; k < order(); ++k) {
    if (idx[static_cast<size_t>(k)] < 0 || idx[static_cast<size_t>(k)] >= dim(k))
      throw std::out_of_range("DenseTensor: index out of range");
    f += idx[static_cast<size_t>(k)] * stride;
    stride *= dim(k);
  }
  return f;
}

DenseTensor& DenseTensor::operator+=(const DenseTensor& o) {
  if (dims_ != o.dims_) throw std::invalid_argument("DenseTensor: shape mismatch in +=");
  data_ += o.data_;
  return *this;
}

DenseTensor& DenseTensor::operator-=(const DenseTensor& o) {
  if (dims_ != o.dims_) throw std::invalid_argument("DenseTensor: shape mismatch in -=");
  data_ -= o.data_;
  return *this;
}

MatricizationMap MatricizationMap::make(const Dims& dims, std::vector<int> row_modes) {
  const int d = static_cast<int>(dims.size());
  std::sort(row_modes.begin(), row_modes.end());
  for (size_t i = 0; i < row_modes.size(); ++i) {
    if (row_modes[i] < 0 || row_modes[i] >= d)
      throw std::invalid_argument("matricize: mode index out of range");
    if (i > 0 && row_modes[i] == row_modes[i - 1])
      throw std::invalid_argument("matricize: duplicate mode index");
  }

  MatricizationMap map;
  map.tensor_dims = dims;
  map.row_modes = std::move(row_modes);
  map.row_stride.assign(static_cast<size_t>(d), 0);
  map.col_stride.assign(static_cast<size_t>(d), 0);

  std::vector<bool> in_rows(static_cast<size_t>(d), false);
  for (int m : map.row_modes) in_rows[static_cast<size_t>(m)] = true;

  Index rs = 1;
  Index cs = 1;
  for (int k = 0; k < d; ++k) {
    if (in_rows[static_cast<size_t>(k)]) {
      map.row_stride[static_cast<size_t>(k)] = rs;
      rs *= dims[static_cast<size_t>(k)];
    } else {
      map.col_stride[static_cast<size_t>(k)] = cs;
      cs *= dims[static_cast<size_t>(k)];
    }
  }
  map.row_dim = rs;
  map.col_dim = cs;
  return map;
}

namespace {

// Walks the flat index range once, tracking (row, col) incrementally.
template <typename Body>
void walk(const MatricizationMap& map, Body&& body) {
  const int d = static_cast<int>(map.tensor_dims.size());
  const Index n = map.row_dim * map.col_dim;
  Dims idx(static_cast<size_t>(d), 0);
  Index r = 0;
  Index c = 0;
  for (Index f = 0; f < n; ++f) {
    body(f, r, c);
    for (int k = 0; k < d; ++k) {
      const size_t uk = static_cast<size_t>(k);
      r += map.row_stride[uk];
      c += map.col_stride[uk];
      if (++idx[uk] < map.tensor_dims[uk]) break;
      idx[uk] = 0;
      r -= map.row_stride[uk] * map.tensor_dims[uk];
      c -= map.col_stride[uk] * map.tensor_dims[uk];
    }
  }
}

}  // namespace

Matrix matricize(const DenseTensor& t, const std::vector<int>& row_modes) {
  auto map = MatricizationMap::make(t.dims(), row_modes);
  Matrix out(map.row_dim, map.col_dim);
  const Vector& data = t.data();
  walk(map, [&](Index f, Index r, Index c) { out(r, c) = data[f]; });
  return out;
}

DenseTensor dematricize(const Matrix& m, const Dims& dims,
                        const std::vector<int>& row_modes) {
  auto map = MatricizationMap::make(dims, row_modes);
  if (m.rows() != map.row_dim || m.cols() != map.col_dim)
    throw std::invalid_argument("dematricize: matrix shape does not match dims/modes");
  DenseTensor t(dims);
  Vector& data = t.data();
  walk(map, [&](Index f, Index r, Index c) { data[f] = m(r, c); });
  return t;
}

DenseTensor mode_product(const DenseTensor& t, const Matrix& m, int mode) {
  if (mode < 0 || mode >= t.order())
    throw std::invalid_argument("mode_product: mode out of range");
  if (m.cols() != t.dim(mode))
    throw std::invalid_argument("mode_product: matrix columns must equal tensor dim");
  Matrix unfolded = m * matricize(t, {mode});
  Dims new_dims = t.dims();
  new_dims[static_cast<size_t>(mode)] = m.rows();
  return dematricize(unfolded, new_dims, {mode});
}

DenseTensor generalized_inner(const DenseTensor& x, const DenseTensor& y) {
  const int n = x.order();
  const int m = y.order();
  if (m > n)
    throw std::invalid_argument("generalized_inner: order(y) exceeds order(x)");
  for (int i = 0; i < m; ++i)
    if (x.dim(i) != y.dim(i))
      throw std::invalid_argument("generalized_inner: leading dimension mismatch");

  std::vector<int> trailing;
  for (int i = m; i < n; ++i) trailing.push_back(i);
  Matrix xs = matricize(x, trailing);  // (prod trailing) x (prod leading)
  Vector out = xs * y.data();
  Dims out_dims(x.dims().begin() + m, x.dims().end());
  return DenseTensor(std::move(out_dims), std::move(out));
}

double inner_scalar(const DenseTensor& x, const DenseTensor& y) {
  if (x.dims() != y.dims())
    throw std::invalid_argument("inner_scalar: shape mismatch");
  return x.data().dot(y.data());
}

DenseTensor outer_product(const DenseTensor& x, const DenseTensor& y) {
  Dims dims = x.dims();
  dims.insert(dims.end(), y.dims().begin(), y.dims().end());
  Vector data(x.size() * y.size());
  for (Index j = 0; j < y.size(); ++j)
    data.segment(j * x.size(), x.size()) = y[j] * x.data();
  return DenseTensor(std::move(dims), std::move(data));
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Matrix kron_reverse(const std::vector<Matrix>& mats) {
  if (mats.empty()) return Matrix::Identity(1, 1);
  Matrix out = mats.front();
  for (size_t i = 1; i < mats.size(); ++i) out = kron(mats[i], out);
  return out;
}

std::vector<Index> unfolding_perm(const Dims& dims, int mode) {
  const int d = static_cast<int>(dims.size());
  if (mode < 0 || mode >= d)
    throw std::invalid_argument("unfolding_perm: mode out of range");
  Dims strides(static_cast<size_t>(d));
  Index s = 1;
  for (int k = 0; k < d; ++k) {
    strides[static_cast<size_t>(k)] = s;
    s *= dims[static_cast<size_t>(k)];
  }
  std::vector<int> rest;
  for (int k = 0; k < d; ++k)
    if (k != mode) rest.push_back(k);

  const Index n = dims_product(dims);
  const Index pm = dims[static_cast<size_t>(mode)];
  std::vector<Index> perm(static_cast<size_t>(n));
  for (Index v = 0; v < n; ++v) {
    Index flat = (v % pm) * strides[static_cast<size_t>(mode)];
    Index j = v / pm;
    for (int k : rest) {
      flat += (j % dims[static_cast<size_t>(k)]) * strides[static_cast<size_t>(k)];
      j /= dims[static_cast<size_t>(k)];
    }
    perm[static_cast<size_t>(v)] = flat;
  }
  return perm;
}

std::vector<Index> unfold_to_matricization_perm(const Dims& dims, int mode,
                                                const std::vector<int>& row_modes) {
  auto map = MatricizationMap::make(dims, row_modes);
  const Index n = dims_product(dims);
  // flat -> (row, col) -> column-major position in the matricization
  std::vector<Index> flat_to_mat(static_cast<size_t>(n));
  walk(map, [&](Index f, Index r, Index c) {
    flat_to_mat[static_cast<size_t>(f)] = r + map.row_dim * c;
  });
  auto uperm = unfolding_perm(dims, mode);
  std::vector<Index> out(static_cast<size_t>(n));
  for (Index v = 0; v < n; ++v)
    out[static_cast<size_t>(v)] = flat_to_mat[static_cast<size_t>(uperm[static_cast<size_t>(v)])];
  return out;
}

std::vector<int> complement_modes(int order, const std::vector<int>& modes) {
  std::vector<bool> in(static_cast<size_t>(order), false);
  for (int m : modes) in[static_cast<size_t>(m)] = true;
  std::vector<int> out;
  for (int k = 0; k < order; ++k)
    if (!in[static_cast<size_t>(k)]) out.push_back(k);
  return out;
}

}  // namespace lrtar
