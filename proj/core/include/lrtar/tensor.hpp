#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace lrtar {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;
using Dims = std::vector<Index>;

Index dims_product(const Dims& dims);

/// Dense real tensor. Flat storage is first-index-fastest, so data() is
/// exactly vec(tensor) and a matrix stored this way is column-major.
class DenseTensor {
public:
  DenseTensor() = default;
  explicit DenseTensor(Dims dims);
  DenseTensor(Dims dims, Vector data);

  int order() const { return static_cast<int>(dims_.size()); }
  const Dims& dims() const { return dims_; }
  Index dim(int k) const { return dims_[static_cast<size_t>(k)]; }
  Index size() const { return data_.size(); }

  Vector& data() { return data_; }
  const Vector& data() const { return data_; }

  double& operator[](Index flat) { return data_[flat]; }
  double operator[](Index flat) const { return data_[flat]; }

  Index flat_index(std::span<const Index> idx) const;
  double& at(std::span<const Index> idx) { return data_[flat_index(idx)]; }
  double at(std::span<const Index> idx) const { return data_[flat_index(idx)]; }

  double norm() const { return data_.norm(); }
  void setZero() { data_.setZero(); }

  DenseTensor& operator+=(const DenseTensor& o);
  DenseTensor& operator-=(const DenseTensor& o);
  DenseTensor& operator*=(double s) {
    data_ *= s;
    return *this;
  }
  friend DenseTensor operator+(DenseTensor a, const DenseTensor& b) {
    a += b;
    return a;
  }
  friend DenseTensor operator-(DenseTensor a, const DenseTensor& b) {
    a -= b;
    return a;
  }
  friend DenseTensor operator*(double s, DenseTensor a) {
    a *= s;
    return a;
  }

private:
  Dims dims_;
  Vector data_;
};

/// Index arithmetic of a multi-mode matricization: the element at
/// multi-index (i_1,...,i_d) lands at row sum_{k in S} i_k * I_k and
/// column sum_{k not in S} i_k * J_k, with modes collapsed in their
/// original order on both sides.
struct MatricizationMap {
  Dims tensor_dims;
  std::vector<int> row_modes;  // strictly increasing
  Index row_dim = 1;
  Index col_dim = 1;
  Dims row_stride;  // per original mode; 0 for column modes
  Dims col_stride;  // per original mode; 0 for row modes

  static MatricizationMap make(const Dims& dims, std::vector<int> row_modes);
};

Matrix matricize(const DenseTensor& t, const std::vector<int>& row_modes);
DenseTensor dematricize(const Matrix& m, const Dims& dims,
                        const std::vector<int>& row_modes);

DenseTensor mode_product(const DenseTensor& t, const Matrix& m, int mode);

/// <x, y> contracts the leading order(y) modes of x against y.
DenseTensor generalized_inner(const DenseTensor& x, const DenseTensor& y);
double inner_scalar(const DenseTensor& x, const DenseTensor& y);

DenseTensor outer_product(const DenseTensor& x, const DenseTensor& y);

Matrix kron(const Matrix& a, const Matrix& b);

/// Kronecker product over a list given in increasing mode order,
/// multiplied in reverse: mats.back() kron ... kron mats.front().
/// This is the convention that makes X_[S] = kron_reverse(Y_S) * G_[S] * ...
/// hold with first-index-fastest vectorization.
Matrix kron_reverse(const std::vector<Matrix>& mats);

/// perm[v] = position in vec(T) of element v of vec(T_(mode)).
std::vector<Index> unfolding_perm(const Dims& dims, int mode);

/// perm[v] = position in vec(T_[row_modes]) (column-major) of element v of
/// vec(T_(mode)).
std::vector<Index> unfold_to_matricization_perm(const Dims& dims, int mode,
                                                const std::vector<int>& row_modes);

std::vector<int> complement_modes(int order, const std::vector<int>& modes);

}  // namespace lrtar
