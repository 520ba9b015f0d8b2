#include "kpca/oracle.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "kpca/linalg.hpp"

namespace kpca {

namespace {

// mu_i = integral of sqrt(2) sin(pi i x) over [0,1] = sqrt(2)(1 - (-1)^i)/(pi i):
// zero for even i, 2 sqrt(2)/(pi i) for odd i.
double basis_mean(int i) {
  if (i % 2 == 0) return 0.0;
  return 2.0 * std::numbers::sqrt2 / (std::numbers::pi * static_cast<double>(i));
}

}  // namespace

OracleSpectrum build_oracle(const KernelSpec& spec) {
  if (spec.kind != KernelKind::spectral)
    throw std::invalid_argument("build_oracle: spectral kernel required");
  spec.validate();

  OracleSpectrum o;
  const Index d = spec.feature_dim();
  o.feat_eigs = spec.feature_eigenvalues;
  o.basis_means.resize(d);
  for (Index j = 0; j < d; ++j) o.basis_means(j) = basis_mean(spec.basis_index(j));
  o.mean_coeffs = o.feat_eigs.array().sqrt() * o.basis_means.array();
  o.mp_sq_norm = o.mean_coeffs.squaredNorm();

  o.sigma = Eigen::MatrixXd(o.feat_eigs.asDiagonal());
  o.sigma.noalias() -= o.mean_coeffs * o.mean_coeffs.transpose();

  SymEigen<double> eig = sym_eig(o.sigma);
  o.sigma_eigs = eig.eigenvalues;
  o.sigma_vecs = eig.eigenvectors;

  // Trace identity tr(Sigma) = tr(C) - |m_P|^2, forced by construction but
  // asserted numerically.
  const double lhs = o.sigma_eigs.sum();
  const double rhs = o.feat_eigs.sum() - o.mp_sq_norm;
  if (std::abs(lhs - rhs) > 1e-10 * std::max(1.0, std::abs(rhs)))
    throw std::runtime_error("build_oracle: trace identity violated");

  // Interlacing under the rank-one downdate: lambda_i(Sigma) <= lambda_i(C).
  const double slack = 1e-12 * o.feat_eigs(0);
  for (Index i = 0; i < d; ++i)
    if (o.sigma_eigs(i) > o.feat_eigs(i) + slack)
      throw std::runtime_error("build_oracle: eigenvalue interlacing violated");

  for (Index i = 0; i + 1 < d; ++i) {
    if (o.sigma_eigs(i) - o.sigma_eigs(i + 1) <= 1e-12 * o.sigma_eigs(0)) {
      o.warnings.push_back("numerically multiple Sigma eigenvalue at index " + std::to_string(i) +
                           "; simple-spectrum assumption violated by this fixture");
    }
  }
  return o;
}

double effective_dim(const OracleSpectrum& oracle, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("effective_dim: t must be > 0");
  return (oracle.sigma_eigs.array() / (oracle.sigma_eigs.array() + t)).sum();
}

double effective_dim_infty(const OracleSpectrum& oracle, const KernelSpec& spec, double t,
                           Index grid_size) {
  if (!(t > 0.0)) throw std::invalid_argument("effective_dim_infty: t must be > 0");
  if (grid_size < 1000)
    throw std::invalid_argument("effective_dim_infty: grid_size must be >= 1000");
  const Eigen::ArrayXd grid = Eigen::ArrayXd::LinSpaced(grid_size, 0.0, 1.0);
  Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(grid_size);
  const double pi = std::numbers::pi;
  for (Index j = 0; j < oracle.dim(); ++j) {
    const double lam = oracle.feat_eigs(j);
    const double i = static_cast<double>(spec.basis_index(j));
    acc += (lam / (lam + t)) * 2.0 * (pi * i * grid).sin().square();
  }
  return acc.maxCoeff();
}

PopulationRecon population_recon(const OracleSpectrum& oracle, Index ell) {
  if (ell < 0 || ell > oracle.dim())
    throw std::invalid_argument("population_recon: ell must lie in [0, D]");
  PopulationRecon out;
  for (Index i = ell; i < oracle.dim(); ++i) {
    out.h_tail += oracle.sigma_eigs(i);
    out.l2_tail += oracle.sigma_eigs(i) * oracle.sigma_eigs(i);
  }
  return out;
}

double mean_function(const OracleSpectrum& oracle, const KernelSpec& spec, double x) {
  Eigen::MatrixXd pt(1, 1);
  pt(0, 0) = x;
  return mean_function_eval(oracle, spec, pt)(0);
}

Eigen::VectorXd mean_function_eval(const OracleSpectrum& oracle, const KernelSpec& spec,
                                   const Eigen::MatrixXd& x) {
  const Eigen::MatrixXd basis = spectral_basis_eval(spec, x);
  return basis * (oracle.feat_eigs.array() * oracle.basis_means.array()).matrix();
}

double mp_inner(const OracleSpectrum& oracle, const Eigen::Ref<const Eigen::VectorXd>& coeffs) {
  if (coeffs.size() != oracle.dim()) throw std::invalid_argument("mp_inner: dimension mismatch");
  return coeffs.dot(oracle.mean_coeffs);
}

SandwichFit sandwich_constants(const OracleSpectrum& oracle, double alpha, Index i_max) {
  SandwichFit fit;
  const Index top = std::min(i_max, oracle.dim());
  if (top < 1) throw std::invalid_argument("sandwich_constants: empty spectrum");
  fit.lo = std::numeric_limits<double>::infinity();
  fit.hi = 0.0;
  for (Index i = 0; i < top; ++i) {
    const double ratio = oracle.sigma_eigs(i) * std::pow(static_cast<double>(i + 1), alpha);
    fit.lo = std::min(fit.lo, ratio);
    fit.hi = std::max(fit.hi, ratio);
  }
  fit.within_default = (fit.lo >= 0.5 && fit.hi <= 1.5);
  return fit;
}

}  // namespace kpca
