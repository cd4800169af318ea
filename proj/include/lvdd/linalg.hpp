#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <vector>

#include "lvdd/error.hpp"
#include "lvdd/tensor.hpp"

namespace lvdd {

using EigenRowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline Eigen::Map<const EigenRowMajor> eigen_view(const Matrix& m) {
  return Eigen::Map<const EigenRowMajor>(m.raw(), static_cast<Eigen::Index>(m.rows()),
                                         static_cast<Eigen::Index>(m.cols()));
}

inline Matrix from_eigen(const Eigen::MatrixXd& e) {
  std::vector<double> data(static_cast<std::size_t>(e.rows() * e.cols()));
  Eigen::Map<EigenRowMajor>(data.data(), e.rows(), e.cols()) = e;
  return Matrix(static_cast<std::size_t>(e.rows()), static_cast<std::size_t>(e.cols()),
                std::move(data));
}

// Thin SVD A = U diag(S) V^T with S descending. Columns of U and V carry a
// deterministic sign: the largest-magnitude entry of each left singular
// vector (first such row on ties) is non-negative.
struct SvdResult {
  Matrix u;                            // m x r, orthonormal columns
  std::vector<double> singular_values; // length r = min(m, n), descending
  Matrix v;                            // n x r, orthonormal columns
};

// Symmetric eigendecomposition; eigenvalues ascending, eigenvectors are the
// matching orthonormal columns with the same sign convention as SvdResult.
struct EigResult {
  std::vector<double> eigenvalues;
  Matrix eigenvectors;
};

namespace detail {

inline void require_finite(const Eigen::Ref<const Eigen::MatrixXd>& a, const char* who) {
  if (!a.allFinite()) throw ValueError(std::string(who) + ": input has non-finite entries");
}

// Flip column pairs so the dominant entry of each `lead` column is >= 0.
inline void fix_signs(Eigen::MatrixXd& lead, Eigen::MatrixXd* follow) {
  for (Eigen::Index j = 0; j < lead.cols(); ++j) {
    Eigen::Index imax = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < lead.rows(); ++i) {
      const double m = std::abs(lead(i, j));
      if (m > best) {
        best = m;
        imax = i;
      }
    }
    if (lead(imax, j) < 0.0) {
      lead.col(j) = -lead.col(j);
      if (follow) follow->col(j) = -follow->col(j);
    }
  }
}

}  // namespace detail

inline SvdResult svd(const Matrix& a) {
  Eigen::MatrixXd m = eigen_view(a);
  detail::require_finite(m, "svd");
  Eigen::JacobiSVD<Eigen::MatrixXd> solver(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (solver.info() != Eigen::Success) throw ConvergenceError("svd: solver did not converge");
  Eigen::MatrixXd u = solver.matrixU();
  Eigen::MatrixXd v = solver.matrixV();
  detail::fix_signs(u, &v);
  const auto& s = solver.singularValues();
  return SvdResult{from_eigen(u), std::vector<double>(s.data(), s.data() + s.size()),
                   from_eigen(v)};
}

// Symmetrized internally as (A + A^T)/2; input must already be symmetric to
// within 1e-12 in max-abs.
inline EigResult sym_eig(const Matrix& a) {
  if (a.rows() != a.cols()) throw ShapeError("sym_eig: matrix must be square");
  Eigen::MatrixXd m = eigen_view(a);
  detail::require_finite(m, "sym_eig");
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw ValueError("sym_eig: input is not symmetric within 1e-12");
  Eigen::MatrixXd s = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s);
  if (solver.info() != Eigen::Success) throw ConvergenceError("sym_eig: did not converge");
  Eigen::MatrixXd q = solver.eigenvectors();
  detail::fix_signs(q, nullptr);
  const auto& w = solver.eigenvalues();
  return EigResult{std::vector<double>(w.data(), w.data() + w.size()), from_eigen(q)};
}

// log det of a symmetric positive-definite matrix via Cholesky.
inline double logdet_psd(const Matrix& a) {
  if (a.rows() != a.cols()) throw ShapeError("logdet_psd: matrix must be square");
  Eigen::MatrixXd m = eigen_view(a);
  detail::require_finite(m, "logdet_psd");
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success)
    throw DefinitenessError("logdet_psd: matrix is not positive definite");
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace lvdd
