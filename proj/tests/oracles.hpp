#pragma once

// Hand-rolled reference computations for the test suites. Deliberately
// independent of the library's linalg path (no Eigen): cyclic Jacobi for
// symmetric eigenvalues, Gaussian elimination for determinants, and naive
// double-loop kernels.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "lvdd/rng.hpp"
#include "lvdd/tensor.hpp"

namespace oracle {

using Mat = std::vector<std::vector<double>>;

inline Mat from_matrix(const lvdd::Matrix& m) {
  Mat a(m.rows(), std::vector<double>(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) a[i][j] = m(i, j);
  return a;
}

// Determinant by Gaussian elimination with partial pivoting.
inline double det(Mat a) {
  const std::size_t n = a.size();
  double sign = 1.0, d = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(a[i][k]) > std::abs(a[piv][k])) piv = i;
    if (a[piv][k] == 0.0) return 0.0;
    if (piv != k) {
      std::swap(a[piv], a[k]);
      sign = -sign;
    }
    d *= a[k][k];
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = a[i][k] / a[k][k];
      for (std::size_t j = k; j < n; ++j) a[i][j] -= f * a[k][j];
    }
  }
  return sign * d;
}

inline double det_minor(const Mat& a, const std::vector<std::size_t>& idx) {
  Mat sub(idx.size(), std::vector<double>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t j = 0; j < idx.size(); ++j) sub[i][j] = a[idx[i]][idx[j]];
  return det(std::move(sub));
}

// Ascending eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
inline std::vector<double> jacobi_eigenvalues(Mat a, int max_sweeps = 100,
                                              double tol = 1e-13) {
  const std::size_t n = a.size();
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += a[i][j] * a[i][j];
    if (std::sqrt(off) < tol) break;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a[p][q] == 0.0) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
      }
  }
  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = a[i][i];
  std::sort(ev.begin(), ev.end());
  return ev;
}

// Descending singular values of an arbitrary matrix via the Gram matrix.
inline std::vector<double> singular_values(const lvdd::Matrix& m) {
  const std::size_t r = m.rows(), c = m.cols();
  const bool use_rows = r <= c;
  const std::size_t n = use_rows ? r : c;
  Mat g(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      if (use_rows)
        for (std::size_t k = 0; k < c; ++k) s += m(i, k) * m(j, k);
      else
        for (std::size_t k = 0; k < r; ++k) s += m(k, i) * m(k, j);
      g[i][j] = s;
    }
  std::vector<double> ev = jacobi_eigenvalues(std::move(g));
  std::vector<double> sv(n);
  for (std::size_t i = 0; i < n; ++i) sv[i] = std::sqrt(std::max(0.0, ev[n - 1 - i]));
  return sv;
}

inline lvdd::Tensor random_tensor(lvdd::Rng& rng, std::vector<std::size_t> shape) {
  std::vector<double> data(lvdd::shape_product(shape));
  for (double& v : data) v = rng.next_gaussian();
  return lvdd::Tensor(std::move(shape), std::move(data));
}

inline lvdd::Matrix random_matrix(lvdd::Rng& rng, std::size_t rows, std::size_t cols) {
  std::vector<double> data(rows * cols);
  for (double& v : data) v = rng.next_gaussian();
  return lvdd::Matrix(rows, cols, std::move(data));
}

inline std::vector<std::vector<double>> random_points(lvdd::Rng& rng, std::size_t n,
                                                      std::size_t dim, double spread = 1.0) {
  std::vector<std::vector<double>> pts(n, std::vector<double>(dim));
  for (auto& p : pts)
    for (double& v : p) v = spread * rng.next_gaussian();
  return pts;
}

// All index subsets of {0..n-1}, bitmask order.
inline std::vector<std::vector<std::size_t>> all_subsets(std::size_t n) {
  std::vector<std::vector<std::size_t>> out;
  out.reserve(1ull << n);
  for (std::size_t mask = 0; mask < (1ull << n); ++mask) {
    std::vector<std::size_t> s;
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (1ull << i)) s.push_back(i);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace oracle
