#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <vector>

#include "lvdd/error.hpp"
#include "lvdd/linalg.hpp"
#include "lvdd/storage_layout.hpp"
#include "lvdd/tensor.hpp"

namespace lvdd {

// Retained rank for one mode under a rank compression ratio: round half up,
// clamped to [1, d].
inline std::size_t truncated_rank(std::size_t extent, double ratio) {
  const auto r = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(extent)));
  if (r < 1) return 1;
  return r > extent ? extent : r;
}

// Tucker-form factorization: core of shape (r_0..r_{n-1}) plus one
// orthonormal d_i x r_i factor per mode.
struct HosvdFactorization {
  Tensor core;
  std::vector<Matrix> factors;
  std::vector<std::size_t> original_shape;
  double ratio = 1.0;
};

// Truncated SVD of the tensor flattened with the instance axis (mode 0) as
// rows and all remaining axes as columns. Comparison baseline only.
struct SvdFactorization {
  Matrix u;                             // m x r
  std::vector<double> singular_values;  // length r, descending
  Matrix v;                             // cols x r
  std::vector<std::size_t> original_shape;
};

namespace detail {

inline Matrix matrix_transpose(const Matrix& m) {
  std::vector<double> out(m.rows() * m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out[j * m.rows() + i] = m(i, j);
  return Matrix(m.cols(), m.rows(), std::move(out));
}

// First `rank` left singular vectors of `a`, extended with an orthonormal
// complement when `rank` exceeds the number of thin-SVD columns (small
// tensors whose unfolding has fewer columns than rows).
inline Matrix leading_left_vectors(const Matrix& a, std::size_t rank) {
  SvdResult s = svd(a);
  const std::size_t have = s.u.cols();
  const std::size_t rows = s.u.rows();
  if (rank <= have) {
    std::vector<double> out(rows * rank);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < rank; ++j) out[i * rank + j] = s.u(i, j);
    return Matrix(rows, rank, std::move(out));
  }
  Eigen::MatrixXd u = eigen_view(s.u);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(u);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(
                                              static_cast<Eigen::Index>(rows),
                                              static_cast<Eigen::Index>(rank));
  Eigen::MatrixXd ext(rows, rank);
  ext.leftCols(static_cast<Eigen::Index>(have)) = u;
  ext.rightCols(static_cast<Eigen::Index>(rank - have)) =
      q.rightCols(static_cast<Eigen::Index>(rank - have));
  return from_eigen(ext);
}

inline void require_finite_tensor(const Tensor& t, const char* who) {
  for (double v : t.data())
    if (!std::isfinite(v)) throw ValueError(std::string(who) + ": non-finite tensor entry");
}

}  // namespace detail

// Truncated higher-order SVD: per-mode factors are the leading left singular
// vectors of each unfolding of the original tensor; the core is the tensor
// contracted with every factor transpose.
inline HosvdFactorization hosvd_decompose(const Tensor& z, double ratio) {
  if (z.order() < 2) throw ShapeError("hosvd_decompose: tensor order must be >= 2");
  if (!(ratio > 0.0) || ratio > 1.0)
    throw ValueError("hosvd_decompose: ratio must lie in (0, 1]");
  detail::require_finite_tensor(z, "hosvd_decompose");

  const std::size_t n = z.order();
  HosvdFactorization f;
  f.original_shape = z.shape();
  f.ratio = ratio;
  f.factors.reserve(n);
  for (std::size_t mode = 0; mode < n; ++mode) {
    const std::size_t r = truncated_rank(z.extent(mode), ratio);
    f.factors.push_back(detail::leading_left_vectors(unfold(z, mode), r));
  }
  Tensor core = z;
  for (std::size_t mode = 0; mode < n; ++mode)
    core = mode_product(core, detail::matrix_transpose(f.factors[mode]), mode);
  f.core = std::move(core);
  return f;
}

inline void validate_factorization(const HosvdFactorization& f) {
  const std::size_t n = f.original_shape.size();
  if (n < 1 || f.factors.size() != n || f.core.order() != n)
    throw ShapeError("hosvd factorization is corrupt: order mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    if (f.factors[i].rows() != f.original_shape[i] || f.factors[i].cols() != f.core.extent(i))
      throw ShapeError("hosvd factorization is corrupt: factor " + std::to_string(i) +
                       " does not match core/original shape");
  }
}

inline Tensor hosvd_reconstruct(const HosvdFactorization& f) {
  validate_factorization(f);
  Tensor t = f.core;
  for (std::size_t mode = 0; mode < f.factors.size(); ++mode)
    t = mode_product(t, f.factors[mode], mode);
  return t;
}

inline SvdFactorization svd_compress(const Tensor& z, std::size_t rank) {
  detail::require_finite_tensor(z, "svd_compress");
  Matrix flat = unfold(z, 0);
  const std::size_t rmax = flat.rows() < flat.cols() ? flat.rows() : flat.cols();
  if (rank < 1 || rank > rmax)
    throw ValueError("svd_compress: rank must lie in [1, " + std::to_string(rmax) + "]");
  SvdResult s = svd(flat);
  const std::size_t m = flat.rows(), c = flat.cols();
  std::vector<double> u(m * rank), v(c * rank);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < rank; ++j) u[i * rank + j] = s.u(i, j);
  for (std::size_t i = 0; i < c; ++i)
    for (std::size_t j = 0; j < rank; ++j) v[i * rank + j] = s.v(i, j);
  s.singular_values.resize(rank);
  return SvdFactorization{Matrix(m, rank, std::move(u)), std::move(s.singular_values),
                          Matrix(c, rank, std::move(v)), z.shape()};
}

inline Tensor svd_reconstruct(const SvdFactorization& f) {
  const std::size_t m = f.u.rows(), c = f.v.rows(), r = f.u.cols();
  if (f.v.cols() != r || f.singular_values.size() != r)
    throw ShapeError("svd factorization is corrupt: rank mismatch");
  std::vector<double> out(m * c, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t k = 0; k < r; ++k) {
      const double w = f.u(i, k) * f.singular_values[k];
      for (std::size_t j = 0; j < c; ++j) out[i * c + j] += w * f.v(j, k);
    }
  return fold(Matrix(m, c, std::move(out)), 0, f.original_shape);
}

// Exact serialized size of the matching archive section (payload plus the
// documented fixed per-section overhead).
inline std::uint64_t storage_bytes(const HosvdFactorization& f, Precision precision) {
  std::uint64_t elems = 1;
  for (std::size_t i = 0; i < f.core.order(); ++i) elems *= f.core.extent(i);
  for (const Matrix& u : f.factors) elems += u.rows() * u.cols();
  return element_size(precision) * elems + section_overhead_bytes(f.original_shape.size());
}

inline std::uint64_t storage_bytes(const SvdFactorization& f, Precision precision) {
  const std::uint64_t r = f.u.cols();
  const std::uint64_t elems = f.u.rows() * r + r + f.v.rows() * r;
  return element_size(precision) * elems + section_overhead_bytes(f.original_shape.size());
}

// Serialized hosvd section size for a given shape and ratio without
// materializing the factorization; the rank rule makes it exact.
inline std::uint64_t hosvd_storage_bytes(const std::vector<std::size_t>& shape, double ratio,
                                         Precision precision) {
  std::uint64_t core = 1, factors = 0;
  for (std::size_t d : shape) {
    const std::uint64_t r = truncated_rank(d, ratio);
    core *= r;
    factors += static_cast<std::uint64_t>(d) * r;
  }
  return element_size(precision) * (core + factors) + section_overhead_bytes(shape.size());
}

inline std::uint64_t raw_storage_bytes(const std::vector<std::size_t>& shape,
                                       Precision precision) {
  std::uint64_t elems = 1;
  for (std::size_t d : shape) elems *= d;
  return element_size(precision) * elems + section_overhead_bytes(shape.size());
}

// Serialized svd-compression size for a given tensor shape and rank without
// materializing the factorization; used for equal-storage rank matching.
inline std::uint64_t svd_storage_bytes(const std::vector<std::size_t>& shape, std::size_t rank,
                                       Precision precision) {
  std::uint64_t cols = 1;
  for (std::size_t i = 1; i < shape.size(); ++i) cols *= shape[i];
  const std::uint64_t elems =
      static_cast<std::uint64_t>(shape[0]) * rank + rank + cols * rank;
  return element_size(precision) * elems + section_overhead_bytes(shape.size());
}

}  // namespace lvdd
