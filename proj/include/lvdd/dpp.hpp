#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "lvdd/error.hpp"
#include "lvdd/linalg.hpp"
#include "lvdd/rng.hpp"
#include "lvdd/tensor.hpp"

namespace lvdd {

// Similarity kernel L_ij = exp(-|z_i - z_j|^2 / 2 sigma^2): symmetric,
// unit diagonal, entries in [0,1], positive semidefinite.
class SimilarityKernel {
 public:
  SimilarityKernel(Matrix l, double sigma) : l_(std::move(l)), sigma_(sigma) {
    if (l_.rows() != l_.cols()) throw ShapeError("kernel matrix must be square");
    if (!(sigma_ > 0.0)) throw ValueError("kernel bandwidth must be positive");
    const std::size_t n = l_.rows();
    for (std::size_t i = 0; i < n; ++i) {
      if (l_(i, i) != 1.0) throw ValueError("kernel diagonal must be exactly 1");
      for (std::size_t j = i + 1; j < n; ++j) {
        if (std::abs(l_(i, j) - l_(j, i)) > 1e-12)
          throw ValueError("kernel must be symmetric within 1e-12");
        if (l_(i, j) < 0.0 || l_(i, j) > 1.0)
          throw ValueError("kernel entries must lie in [0,1]");
      }
    }
  }

  const Matrix& l() const { return l_; }
  double sigma() const { return sigma_; }
  std::size_t n() const { return l_.rows(); }

 private:
  Matrix l_;
  double sigma_;
};

enum class SelectionMethod : std::uint8_t { exact_kdpp = 0, greedy_map = 1 };

struct Selection {
  std::vector<std::size_t> indices;  // strictly increasing
  double log_prob = 0.0;             // log det(L_S) - log det(L + I)
  SelectionMethod method = SelectionMethod::exact_kdpp;
};

inline SimilarityKernel rbf_kernel(const std::vector<std::vector<double>>& points, double sigma) {
  if (points.empty()) throw ValueError("rbf_kernel: empty point set");
  if (!(sigma > 0.0)) throw ValueError("rbf_kernel: sigma must be positive");
  const std::size_t n = points.size();
  const std::size_t dim = points[0].size();
  for (const auto& p : points)
    if (p.size() != dim) throw ShapeError("rbf_kernel: point dimensions differ");
  std::vector<double> l(n * n, 1.0);
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        const double d = points[i][k] - points[j][k];
        d2 += d * d;
      }
      const double v = std::exp(-d2 * inv);
      l[i * n + j] = v;
      l[j * n + i] = v;
    }
  return SimilarityKernel(Matrix(n, n, std::move(l)), sigma);
}

// Median of all pairwise Euclidean distances (mean of the two middle order
// statistics when the count is even).
inline double median_heuristic_sigma(const std::vector<std::vector<double>>& points) {
  if (points.size() < 2) throw ValueError("median_heuristic_sigma: need at least 2 points");
  const std::size_t n = points.size();
  const std::size_t dim = points[0].size();
  for (const auto& p : points)
    if (p.size() != dim) throw ShapeError("median_heuristic_sigma: point dimensions differ");
  std::vector<double> dists;
  dists.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        const double d = points[i][k] - points[j][k];
        d2 += d * d;
      }
      dists.push_back(std::sqrt(d2));
    }
  std::sort(dists.begin(), dists.end());
  const std::size_t m = dists.size();
  const double med = (m % 2 == 1) ? dists[m / 2] : 0.5 * (dists[m / 2 - 1] + dists[m / 2]);
  if (!(med > 0.0))
    throw ValueError("median_heuristic_sigma: degenerate bandwidth (median distance is zero)");
  return med;
}

namespace detail {

inline void check_indices(std::size_t n, const std::vector<std::size_t>& s) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] >= n) throw IndexError("selection index out of range");
    for (std::size_t j = i + 1; j < s.size(); ++j)
      if (s[i] == s[j]) throw ValueError("selection indices must be unique");
  }
}

inline double logdet_l_plus_i(const Matrix& l) {
  Eigen::MatrixXd m = eigen_view(l);
  m.diagonal().array() += 1.0;
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success)
    throw DefinitenessError("kernel + I failed Cholesky; kernel is far from PSD");
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

// log det(L_S); -inf when the minor is numerically singular or indefinite.
inline double logdet_minor(const Matrix& l, const std::vector<std::size_t>& s) {
  if (s.empty()) return 0.0;
  const auto lv = eigen_view(l);
  Eigen::MatrixXd sub(s.size(), s.size());
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j)
      sub(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          lv(static_cast<Eigen::Index>(s[i]), static_cast<Eigen::Index>(s[j]));
  Eigen::LLT<Eigen::MatrixXd> llt(sub);
  if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

// Eigenvalues of the kernel, clipped per the PSD tolerance: values in
// [-1e-9 n, 0) clamp to 0, anything lower is a PSD violation.
inline EigResult clipped_eig(const Matrix& l) {
  EigResult e = sym_eig(l);
  const double floor = -1e-9 * static_cast<double>(l.rows());
  for (double& v : e.eigenvalues) {
    if (v < floor)
      throw DefinitenessError("kernel eigenvalue " + std::to_string(v) +
                              " violates the PSD tolerance");
    if (v < 0.0) v = 0.0;
  }
  return e;
}

}  // namespace detail

inline double subset_log_prob(const Matrix& l, const std::vector<std::size_t>& s) {
  detail::check_indices(l.rows(), s);
  const double num = detail::logdet_minor(l, s);
  if (std::isinf(num)) return num;
  return num - detail::logdet_l_plus_i(l);
}

inline double subset_log_prob(const SimilarityKernel& k, const std::vector<std::size_t>& s) {
  return subset_log_prob(k.l(), s);
}

// Exact k-DPP sample: P(S) proportional to det(L_S) over |S| = size.
// Two stages: (1) pick `size` eigenvectors using the elementary symmetric
// polynomials e_j of the eigenvalues, (2) sample one item per step from the
// squared row norms of the retained eigenvector basis, projecting the basis
// onto the complement of the chosen coordinate after each draw.
inline Selection sample_kdpp(const SimilarityKernel& k, std::size_t size, Rng& rng) {
  const std::size_t n = k.n();
  if (size > n) throw InfeasibleSizeError("sample_kdpp: size exceeds ground-set size");
  Selection sel;
  sel.method = SelectionMethod::exact_kdpp;
  if (size == 0) {
    sel.log_prob = -detail::logdet_l_plus_i(k.l());
    return sel;
  }

  EigResult eig = detail::clipped_eig(k.l());
  std::vector<double>& lam = eig.eigenvalues;  // ascending
  const double lam_max = lam.back();
  const double rank_tol = lam_max * static_cast<double>(n) * 1e-14;
  std::size_t rank = 0;
  for (double v : lam)
    if (v > rank_tol) ++rank;
  if (size > rank)
    throw InfeasibleSizeError("sample_kdpp: size " + std::to_string(size) +
                              " exceeds kernel numerical rank " + std::to_string(rank));

  // e[j][m] = e_j(lam_1..lam_m) on eigenvalues normalized by lam_max; the
  // selection ratios are invariant under that rescaling.
  std::vector<std::vector<double>> e(size + 1, std::vector<double>(n + 1, 0.0));
  for (std::size_t m = 0; m <= n; ++m) e[0][m] = 1.0;
  for (std::size_t j = 1; j <= size; ++j)
    for (std::size_t m = 1; m <= n; ++m)
      e[j][m] = e[j][m - 1] + (lam[m - 1] / lam_max) * e[j - 1][m - 1];

  std::vector<std::size_t> chosen_vecs;
  std::size_t remaining = size;
  for (std::size_t m = n; m > 0 && remaining > 0; --m) {
    double marginal;
    if (m == remaining) {
      marginal = 1.0;
    } else {
      if (e[remaining][m] <= 0.0) continue;
      marginal = (lam[m - 1] / lam_max) * e[remaining - 1][m - 1] / e[remaining][m];
    }
    if (rng.next_double() < marginal) {
      chosen_vecs.push_back(m - 1);
      --remaining;
    }
  }

  // Basis of the chosen eigenvectors; columns stay orthonormal throughout.
  const auto qv = eigen_view(eig.eigenvectors);
  Eigen::MatrixXd v(n, chosen_vecs.size());
  for (std::size_t c = 0; c < chosen_vecs.size(); ++c)
    v.col(static_cast<Eigen::Index>(c)) = qv.col(static_cast<Eigen::Index>(chosen_vecs[c]));

  std::vector<std::size_t> items;
  while (v.cols() > 0) {
    const Eigen::Index cols = v.cols();
    Eigen::VectorXd p = v.cwiseProduct(v).rowwise().sum();
    const double total = p.sum();
    const double u = rng.next_double() * total;
    double acc = 0.0;
    Eigen::Index pick = static_cast<Eigen::Index>(n) - 1;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      acc += p(i);
      if (u < acc) {
        pick = i;
        break;
      }
    }
    items.push_back(static_cast<std::size_t>(pick));
    if (cols == 1) break;

    // Project the basis onto { x in span(V) : x_pick = 0 }.
    Eigen::Index jstar = 0;
    double best = -1.0;
    for (Eigen::Index j = 0; j < cols; ++j) {
      const double m = std::abs(v(pick, j));
      if (m > best) {
        best = m;
        jstar = j;
      }
    }
    Eigen::VectorXd vj = v.col(jstar);
    const double pivot = vj(pick);
    v.col(jstar) = v.col(cols - 1);
    v.conservativeResize(Eigen::NoChange, cols - 1);
    for (Eigen::Index j = 0; j < v.cols(); ++j)
      v.col(j) -= vj * (v(pick, j) / pivot);
    v.row(pick).setZero();  // exact, so the item cannot be drawn twice
    // Gram-Schmidt re-orthonormalization.
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
      for (Eigen::Index l = 0; l < j; ++l) v.col(j) -= v.col(l).dot(v.col(j)) * v.col(l);
      v.col(j).normalize();
    }
  }

  std::sort(items.begin(), items.end());
  sel.indices = std::move(items);
  sel.log_prob = subset_log_prob(k, sel.indices);
  return sel;
}

// Deterministic greedy maximization of log det(L_S) via incremental
// Cholesky conditional-variance gains; ties break to the lowest index.
// The selected index sequence is invariant under positive rescaling of L.
inline Selection greedy_map(const Matrix& l, std::size_t size) {
  const std::size_t n = l.rows();
  if (size < 1 || size > n) throw ValueError("greedy_map: size out of range [1, n]");
  const auto lv = eigen_view(l);

  std::vector<double> d(n);  // conditional variance of each candidate
  // Rows of the partial Cholesky factor, one per candidate.
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                            static_cast<Eigen::Index>(size));
  for (std::size_t i = 0; i < n; ++i) d[i] = lv(i, i);

  std::vector<std::size_t> chosen;
  std::vector<char> used(n, 0);
  for (std::size_t step = 0; step < size; ++step) {
    std::size_t best = n;
    double best_gain = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (used[i]) continue;
      if (d[i] > 0.0 && d[i] > best_gain) {
        best_gain = d[i];
        best = i;
      }
    }
    if (best == n) {
      // Only rank-deficient candidates remain; take the lowest unused index.
      for (std::size_t i = 0; i < n && best == n; ++i)
        if (!used[i]) best = i;
    }
    used[best] = 1;
    chosen.push_back(best);
    if (step + 1 == size) break;
    if (!(d[best] > 0.0)) continue;  // forced rank-deficient pick; gains stay -inf

    const double root = std::sqrt(d[best]);
    for (std::size_t i = 0; i < n; ++i) {
      if (used[i]) continue;
      double dot = 0.0;
      for (std::size_t t = 0; t < step; ++t)
        dot += c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) *
               c(static_cast<Eigen::Index>(best), static_cast<Eigen::Index>(t));
      const double e = (lv(static_cast<Eigen::Index>(best), static_cast<Eigen::Index>(i)) - dot) / root;
      c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(step)) = e;
      d[i] -= e * e;
    }
  }

  std::sort(chosen.begin(), chosen.end());
  Selection sel;
  sel.indices = std::move(chosen);
  sel.method = SelectionMethod::greedy_map;
  sel.log_prob = subset_log_prob(l, sel.indices);
  return sel;
}

inline Selection greedy_map(const SimilarityKernel& k, std::size_t size) {
  return greedy_map(k.l(), size);
}

}  // namespace lvdd
