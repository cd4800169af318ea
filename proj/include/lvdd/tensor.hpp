#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "lvdd/error.hpp"

namespace lvdd {

// Dense real matrix, row-major storage, immutable after construction.
class Matrix {
 public:
  Matrix() = default;

  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (rows_ == 0 || cols_ == 0)
      throw ShapeError("matrix extents must be positive");
    if (rows_ * cols_ != data_.size())
      throw ShapeError("matrix data length " + std::to_string(data_.size()) +
                       " does not match " + std::to_string(rows_) + "x" + std::to_string(cols_));
  }

  static Matrix zeros(std::size_t rows, std::size_t cols) {
    return Matrix(rows, cols, std::vector<double>(rows * cols, 0.0));
  }

  static Matrix identity(std::size_t n) {
    Matrix m = zeros(n, n);
    for (std::size_t i = 0; i < n; ++i) m.data_[i * n + i] = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  const std::vector<double>& data() const { return data_; }
  const double* raw() const { return data_.data(); }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Dense real tensor of order >= 1. Elements are stored row-major: the
// linear offset of index (i_0, ..., i_{n-1}) is sum_k i_k * stride_k with
// stride_{n-1} = 1 and stride_k = d_{k+1} * ... * d_{n-1}.
class Tensor {
 public:
  Tensor() = default;

  Tensor(std::vector<std::size_t> shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_.empty()) throw ShapeError("tensor order must be >= 1");
    std::size_t n = 1;
    for (std::size_t d : shape_) {
      if (d == 0) throw ShapeError("tensor extents must be >= 1");
      n *= d;
    }
    if (n != data_.size())
      throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                       " does not match shape product " + std::to_string(n));
  }

  static Tensor zeros(std::vector<std::size_t> shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return Tensor(std::move(shape), std::vector<double>(n, 0.0));
  }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t order() const { return shape_.size(); }
  std::size_t extent(std::size_t mode) const { return shape_.at(mode); }
  std::size_t size() const { return data_.size(); }
  const std::vector<double>& data() const { return data_; }
  double operator[](std::size_t linear) const { return data_[linear]; }

  double at(std::initializer_list<std::size_t> idx) const {
    std::size_t off = 0, k = 0;
    for (std::size_t i : idx) off = off * shape_[k++] + i;
    return data_[off];
  }

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

inline std::size_t shape_product(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         [](std::size_t a, std::size_t b) { return a * b; });
}

namespace detail {

// Row-major layout factors (lead, d_mode, trail): linear offset of an
// element is a * d_mode * trail + i_mode * trail + b.
inline void mode_split(const std::vector<std::size_t>& shape, std::size_t mode,
                       std::size_t& lead, std::size_t& trail) {
  lead = 1;
  trail = 1;
  for (std::size_t k = 0; k < mode; ++k) lead *= shape[k];
  for (std::size_t k = mode + 1; k < shape.size(); ++k) trail *= shape[k];
}

}  // namespace detail

// Mode-m unfolding: rows index mode m; columns enumerate the remaining
// modes in their original order with the rightmost varying fastest, i.e.
// element (i_0..i_{n-1}) lands at column lead_index * trail + trail_index.
// fold() below is the exact inverse of this layout.
inline Matrix unfold(const Tensor& t, std::size_t mode) {
  if (mode >= t.order())
    throw IndexError("unfold: mode " + std::to_string(mode) + " out of range for order " +
                     std::to_string(t.order()));
  std::size_t lead, trail;
  detail::mode_split(t.shape(), mode, lead, trail);
  const std::size_t d = t.extent(mode);
  const std::size_t cols = lead * trail;
  std::vector<double> out(d * cols);
  const double* src = t.data().data();
  for (std::size_t a = 0; a < lead; ++a)
    for (std::size_t i = 0; i < d; ++i) {
      const double* s = src + (a * d + i) * trail;
      double* dst = out.data() + i * cols + a * trail;
      std::copy(s, s + trail, dst);
    }
  return Matrix(d, cols, std::move(out));
}

inline Tensor fold(const Matrix& m, std::size_t mode, const std::vector<std::size_t>& shape) {
  if (mode >= shape.size())
    throw IndexError("fold: mode " + std::to_string(mode) + " out of range for order " +
                     std::to_string(shape.size()));
  std::size_t lead, trail;
  detail::mode_split(shape, mode, lead, trail);
  const std::size_t d = shape[mode];
  if (m.rows() != d || m.cols() != lead * trail)
    throw ShapeError("fold: matrix " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                     " does not match mode-" + std::to_string(mode) + " unfolding of target shape");
  std::vector<double> out(d * lead * trail);
  const double* src = m.raw();
  const std::size_t cols = m.cols();
  for (std::size_t a = 0; a < lead; ++a)
    for (std::size_t i = 0; i < d; ++i) {
      const double* s = src + i * cols + a * trail;
      double* dst = out.data() + (a * d + i) * trail;
      std::copy(s, s + trail, dst);
    }
  return Tensor(shape, std::move(out));
}

// Mode-m tensor-matrix product: replaces extent d_mode by a.rows().
// Equal to fold(a * unfold(t, mode), mode, new_shape).
inline Tensor mode_product(const Tensor& t, const Matrix& a, std::size_t mode) {
  if (mode >= t.order())
    throw IndexError("mode_product: mode " + std::to_string(mode) + " out of range");
  if (a.cols() != t.extent(mode))
    throw ShapeError("mode_product: inner dimensions " + std::to_string(a.cols()) + " vs " +
                     std::to_string(t.extent(mode)) + " do not match at mode " +
                     std::to_string(mode));
  std::size_t lead, trail;
  detail::mode_split(t.shape(), mode, lead, trail);
  const std::size_t d = t.extent(mode);
  const std::size_t r = a.rows();
  std::vector<std::size_t> new_shape = t.shape();
  new_shape[mode] = r;
  std::vector<double> out(lead * r * trail, 0.0);
  const double* src = t.data().data();
  const double* am = a.raw();
  // out[a, j, b] = sum_i A[j, i] * t[a, i, b]
  for (std::size_t blk = 0; blk < lead; ++blk) {
    const double* tb = src + blk * d * trail;
    double* ob = out.data() + blk * r * trail;
    for (std::size_t j = 0; j < r; ++j) {
      const double* arow = am + j * d;
      double* orow = ob + j * trail;
      for (std::size_t i = 0; i < d; ++i) {
        const double w = arow[i];
        if (w == 0.0) continue;
        const double* trow = tb + i * trail;
        for (std::size_t b = 0; b < trail; ++b) orow[b] += w * trow[b];
      }
    }
  }
  return Tensor(std::move(new_shape), std::move(out));
}

inline double frobenius_norm(const Tensor& t) {
  double s = 0.0;
  for (double v : t.data()) s += v * v;
  return std::sqrt(s);
}

inline double frobenius_distance(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw ShapeError("frobenius_distance: shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace lvdd
