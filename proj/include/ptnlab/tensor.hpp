#pragma once

#include <Eigen/Core>

#include <cmath>
#include <initializer_list>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ptnlab {

using Index = Eigen::Index;

/// Dense value with an explicit shape, stored flat in row-major order.
/// The shape product must always equal the number of stored elements.
template <typename Scalar>
struct TensorT {
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  std::vector<Index> shape;
  Array data;

  TensorT() = default;

  explicit TensorT(std::vector<Index> s) : shape(std::move(s)) {
    data = Array::Zero(checked_numel(shape));
  }

  TensorT(std::vector<Index> s, std::initializer_list<Scalar> values)
      : shape(std::move(s)) {
    const Index n = checked_numel(shape);
    if (static_cast<Index>(values.size()) != n)
      throw std::invalid_argument("tensor: value count does not match shape");
    data.resize(n);
    Index i = 0;
    for (Scalar v : values) data[i++] = v;
  }

  static TensorT zeros(std::vector<Index> s) { return TensorT(std::move(s)); }

  static TensorT full(std::vector<Index> s, Scalar value) {
    TensorT t(std::move(s));
    t.data.setConstant(value);
    return t;
  }

  static TensorT scalar(Scalar value) { return TensorT({1}, {value}); }

  Index numel() const { return data.size(); }
  int rank() const { return static_cast<int>(shape.size()); }

  Index dim(int i) const {
    if (i < 0 || i >= rank()) throw std::out_of_range("tensor: dim index");
    return shape[static_cast<size_t>(i)];
  }

  Scalar& operator[](Index i) { return data[i]; }
  Scalar operator[](Index i) const { return data[i]; }

  /// Row-major element access for rank-2 tensors (images).
  Scalar& at(Index r, Index c) { return data[r * shape[1] + c]; }
  Scalar at(Index r, Index c) const { return data[r * shape[1] + c]; }

  /// Row-major element access for rank-3 tensors (channel, row, col).
  Scalar& at(Index ch, Index r, Index c) {
    return data[(ch * shape[1] + r) * shape[2] + c];
  }
  Scalar at(Index ch, Index r, Index c) const {
    return data[(ch * shape[1] + r) * shape[2] + c];
  }

  bool same_shape(const TensorT& other) const { return shape == other.shape; }

  TensorT reshaped(std::vector<Index> s) const {
    if (checked_numel(s) != numel())
      throw std::invalid_argument("tensor: reshape changes element count");
    TensorT out;
    out.shape = std::move(s);
    out.data = data;
    return out;
  }

  bool all_finite() const { return data.isFinite().all(); }

  void ensure_finite(const std::string& who) const {
    if (!all_finite())
      throw std::runtime_error(who + ": non-finite value in tensor");
  }

  std::string shape_str() const {
    std::string out = "[";
    for (size_t i = 0; i < shape.size(); ++i) {
      if (i) out += ",";
      out += std::to_string(shape[i]);
    }
    return out + "]";
  }

  static Index checked_numel(const std::vector<Index>& s) {
    Index n = 1;
    for (Index e : s) {
      if (e <= 0) throw std::invalid_argument("tensor: non-positive extent");
      n *= e;
    }
    return n;
  }
};

using Tensor = TensorT<double>;

}  // namespace ptnlab
