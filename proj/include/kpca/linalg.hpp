#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace kpca {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Vector<Scalar, Eigen::Dynamic>;

using Index = Eigen::Index;

/// Relative spectral cutoff used by the pseudo-inverse family. Gram matrices
/// of smooth kernels are numerically rank-deficient, so every inverse-type
/// operation thresholds eigenvalues at rtol * lambda_max.
inline constexpr double kDefaultRtol = 1e-10;

/// Requested rank exceeds what the spectrum supports; carries the rank that
/// is actually achievable at the active threshold.
class RankError : public std::runtime_error {
 public:
  RankError(const std::string& what, Index achievable)
      : std::runtime_error(what + " (achievable rank: " + std::to_string(achievable) + ")"),
        achievable_rank(achievable) {}

  Index achievable_rank;
};

/// Full eigendecomposition of a symmetric matrix, eigenvalues descending,
/// eigenvectors as orthonormal columns in matching order.
template <typename Scalar>
struct SymEigen {
  VectorX<Scalar> eigenvalues;
  MatrixX<Scalar> eigenvectors;
};

/// C_n = I - (1/n) 1 1^T, the projector annihilating constant vectors.
/// Callers needing H_n form it as n * centering_matrix(n).
template <typename Scalar = double>
MatrixX<Scalar> centering_matrix(Index n) {
  if (n < 1) throw std::invalid_argument("centering_matrix: n must be >= 1");
  MatrixX<Scalar> c = MatrixX<Scalar>::Identity(n, n);
  c.array() -= Scalar(1) / static_cast<Scalar>(n);
  return c;
}

/// C_n * A without forming C_n: subtracts the column mean from every column.
template <typename Derived>
MatrixX<typename Derived::Scalar> center_cols(const Eigen::MatrixBase<Derived>& a) {
  MatrixX<typename Derived::Scalar> out = a;
  out.rowwise() -= a.colwise().mean();
  return out;
}

/// C_n * A * C_n for square A, in O(n^2): subtracts row and column means and
/// adds back the grand mean.
template <typename Derived>
MatrixX<typename Derived::Scalar> center_sym(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  if (a.rows() != a.cols()) throw std::invalid_argument("center_sym: matrix must be square");
  MatrixX<Scalar> out = a;
  VectorX<Scalar> col_mean = a.colwise().mean().transpose();
  VectorX<Scalar> row_mean = a.rowwise().mean();
  Scalar grand = col_mean.mean();
  out.rowwise() -= col_mean.transpose();
  out.colwise() -= row_mean;
  out.array() += grand;
  return out;
}

namespace detail {

// Canonical eigenvector orientation: first coordinate of nonnegligible
// magnitude is made positive. Resolves the sign ambiguity deterministically.
template <typename Scalar>
void orient_columns(MatrixX<Scalar>& v) {
  for (Index j = 0; j < v.cols(); ++j) {
    const Scalar peak = v.col(j).cwiseAbs().maxCoeff();
    if (peak == Scalar(0)) continue;
    for (Index i = 0; i < v.rows(); ++i) {
      if (std::abs(v(i, j)) > Scalar(1e-12) * peak) {
        if (v(i, j) < Scalar(0)) v.col(j) = -v.col(j);
        break;
      }
    }
  }
}

}  // namespace detail

/// Eigendecomposition of a symmetric matrix. The input is symmetrized as
/// (A + A^T)/2 first, which absorbs roundoff from products like
/// K_mn H_n K_nm. Eigenvalues come out descending; eigenvector signs follow
/// the first-nonzero-positive convention.
template <typename Derived>
SymEigen<typename Derived::Scalar> sym_eig(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  if (a.rows() != a.cols()) throw std::invalid_argument("sym_eig: matrix must be square");
  if (!a.allFinite()) throw std::invalid_argument("sym_eig: matrix has non-finite entries");

  MatrixX<Scalar> sym = (a + a.transpose()) / Scalar(2);
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> solver(sym);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("sym_eig: eigendecomposition failed to converge");

  SymEigen<Scalar> out;
  out.eigenvalues = solver.eigenvalues().reverse();
  out.eigenvectors = solver.eigenvectors().rowwise().reverse();
  detail::orient_columns(out.eigenvectors);
  return out;
}

namespace detail {

// Shared spectral-function backend for the pseudo-inverse family. Applies fn
// to eigenvalues above the cutoff and zeroes the rest.
template <typename Derived, typename Fn>
MatrixX<typename Derived::Scalar> psd_spectral_apply(const Eigen::MatrixBase<Derived>& a,
                                                     double rtol, const char* caller, Fn&& fn) {
  using Scalar = typename Derived::Scalar;
  if (rtol <= 0.0 || rtol >= 1.0)
    throw std::invalid_argument(std::string(caller) + ": rtol must lie in (0,1)");

  SymEigen<Scalar> eig = sym_eig(a);
  const Scalar w_max = eig.eigenvalues.size() > 0 ? eig.eigenvalues(0) : Scalar(0);
  const Scalar scale = eig.eigenvalues.cwiseAbs().maxCoeff();
  if (eig.eigenvalues.size() > 0 &&
      eig.eigenvalues(eig.eigenvalues.size() - 1) < Scalar(-1e-6) * scale)
    throw std::runtime_error(std::string(caller) + ": matrix is not positive semi-definite");

  const Scalar cutoff = Scalar(rtol) * std::max(w_max, Scalar(0));
  VectorX<Scalar> mapped = VectorX<Scalar>::Zero(eig.eigenvalues.size());
  for (Index i = 0; i < eig.eigenvalues.size(); ++i)
    if (eig.eigenvalues(i) > cutoff) mapped(i) = fn(eig.eigenvalues(i));

  return eig.eigenvectors * mapped.asDiagonal() * eig.eigenvectors.transpose();
}

}  // namespace detail

/// Moore-Penrose pseudo-inverse of a symmetric PSD matrix with spectral
/// thresholding: eigenvalues <= rtol * lambda_max are treated as zero.
template <typename Derived>
MatrixX<typename Derived::Scalar> pinv_psd(const Eigen::MatrixBase<Derived>& a,
                                           double rtol = kDefaultRtol) {
  using Scalar = typename Derived::Scalar;
  return detail::psd_spectral_apply(a, rtol, "pinv_psd",
                                    [](Scalar w) { return Scalar(1) / w; });
}

/// Pseudo-inverse square root on the retained eigenspace: eigenvalues above
/// the cutoff map to w^{-1/2}, the rest to zero. This is the thresholded
/// stand-in for K_mm^{-1/2} when K_mm is numerically singular.
template <typename Derived>
MatrixX<typename Derived::Scalar> inv_sqrt_psd(const Eigen::MatrixBase<Derived>& a,
                                               double rtol = kDefaultRtol) {
  using Scalar = typename Derived::Scalar;
  return detail::psd_spectral_apply(a, rtol, "inv_sqrt_psd",
                                    [](Scalar w) { return Scalar(1) / std::sqrt(w); });
}

/// Thresholded PSD square root: w^{1/2} on the retained eigenspace.
template <typename Derived>
MatrixX<typename Derived::Scalar> sqrt_psd(const Eigen::MatrixBase<Derived>& a,
                                           double rtol = kDefaultRtol) {
  using Scalar = typename Derived::Scalar;
  return detail::psd_spectral_apply(a, rtol, "sqrt_psd",
                                    [](Scalar w) { return std::sqrt(w); });
}

/// Rank of a symmetric PSD matrix at the relative threshold rtol.
template <typename Derived>
Index psd_rank(const Eigen::MatrixBase<Derived>& a, double rtol = kDefaultRtol) {
  using Scalar = typename Derived::Scalar;
  SymEigen<Scalar> eig = sym_eig(a);
  if (eig.eigenvalues.size() == 0) return 0;
  const Scalar cutoff = Scalar(rtol) * std::max(eig.eigenvalues(0), Scalar(0));
  Index r = 0;
  while (r < eig.eigenvalues.size() && eig.eigenvalues(r) > cutoff) ++r;
  return r;
}

/// Operator (spectral) norm of a general rectangular matrix.
template <typename Derived>
typename Derived::Scalar operator_norm(const Eigen::MatrixBase<Derived>& a) {
  if (a.size() == 0) return typename Derived::Scalar(0);
  Eigen::JacobiSVD<MatrixX<typename Derived::Scalar>> svd(a);
  return svd.singularValues()(0);
}

}  // namespace kpca
