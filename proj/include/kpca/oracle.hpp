#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "kpca/kernels.hpp"

namespace kpca {

/// Exact population quantities of the spectral kernel. In the feature
/// coordinates x -> (sqrt(lambda_j) e_j(x))_j the uncentered covariance
/// operator C has matrix diag(lambda) and the covariance operator is the
/// rank-one downdate
///     S = diag(lambda) - mbar mbar^T,   mbar_j = sqrt(lambda_j) mu_j,
/// with mu_j the mean of the j-th basis function under the uniform
/// distribution on [0,1].
struct OracleSpectrum {
  Eigen::VectorXd feat_eigs;    // lambda(C), identical to the kernel's eigenvalues
  Eigen::VectorXd basis_means;  // mu_j = integral of e_j over [0,1]
  Eigen::VectorXd mean_coeffs;  // feature coordinates of the mean element
  double mp_sq_norm = 0.0;      // squared RKHS norm of the mean element
  Eigen::MatrixXd sigma;        // S
  Eigen::VectorXd sigma_eigs;   // eigenvalues of S, descending
  Eigen::MatrixXd sigma_vecs;   // matching orthonormal eigenvectors (columns)
  std::vector<std::string> warnings;  // e.g. numerically multiple eigenvalues

  Index dim() const { return feat_eigs.size(); }
};

/// Builds the oracle and asserts its structural identities (trace identity,
/// eigenvalue interlacing under the rank-one downdate). Throws
/// std::invalid_argument for non-spectral kernels.
OracleSpectrum build_oracle(const KernelSpec& spec);

/// Effective dimension N_Sigma(t) = sum_i s_i / (s_i + t). Strictly
/// decreasing in t; tends to rank(Sigma) as t -> 0 and to 0 as t -> inf.
double effective_dim(const OracleSpectrum& oracle, double t);

/// Grid approximation (a lower bound) of
/// N_{C,inf}(t) = sup_x <k(.,x), (C + tI)^{-1} k(.,x)>, evaluated on a
/// uniform grid over [0,1]. C is diagonal in the feature basis, so the
/// integrand is sum_j lambda_j e_j(x)^2 / (lambda_j + t).
double effective_dim_infty(const OracleSpectrum& oracle, const KernelSpec& spec, double t,
                           Index grid_size = 10000);

struct PopulationRecon {
  double h_tail = 0.0;   // sum of eigenvalues beyond ell
  double l2_tail = 0.0;  // sum of squared eigenvalues beyond ell
};

/// Exact population reconstruction errors: tail sums over sigma_eigs.
PopulationRecon population_recon(const OracleSpectrum& oracle, Index ell);

/// Mean function m_P(x) = sum_j lambda_j mu_j e_j(x).
double mean_function(const OracleSpectrum& oracle, const KernelSpec& spec, double x);

/// Batch version of mean_function over sample rows.
Eigen::VectorXd mean_function_eval(const OracleSpectrum& oracle, const KernelSpec& spec,
                                   const Eigen::MatrixXd& x);

/// <f, m_P> for f given in feature coordinates.
double mp_inner(const OracleSpectrum& oracle, const Eigen::Ref<const Eigen::VectorXd>& coeffs);

struct SandwichFit {
  double lo = 0.0;  // min over i <= i_max of sigma_eigs(i) * i^alpha
  double hi = 0.0;  // max over the same range
  bool within_default = false;  // whether [0.5, 1.5] held
};

/// Empirical check of the polynomial-decay sandwich on the Sigma spectrum,
/// returning refit constants when the default band fails.
SandwichFit sandwich_constants(const OracleSpectrum& oracle, double alpha, Index i_max = 50);

}  // namespace kpca
