#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "kpca/kernels.hpp"
#include "kpca/linalg.hpp"

namespace kpca {

enum class Variant { ekpca, nystrom, rff };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& name);

/// A fitted model: top-ell eigenvalues and eigenfunctions in a coefficient
/// representation.
///
/// For ekpca/nystrom the i-th eigenfunction is
///     phi_i = sum_j coeffs(i,j) k(., expansion_points.row(j)),
/// expanded over the full sample (ekpca) or the subsample (nystrom). For
/// feature-map models (rff and the exact spectral map) the rows of coeffs are
/// coordinates in the feature space and phi_i(x) = <coeffs.row(i), Phi(x)>.
///
/// Invariant: the eigenfunctions are orthonormal in the RKHS, i.e.
/// coeffs * K_exp * coeffs^T = I (K_exp the Gram matrix on the expansion
/// points, or the identity for feature models).
struct KpcaModel {
  Variant variant = Variant::ekpca;
  Eigen::VectorXd eigenvalues;  // descending, all above rtol * largest
  Eigen::MatrixXd coeffs;       // ell x p
  Eigen::MatrixXd expansion_points;        // p x d, empty for feature models
  std::vector<Index> expansion_indices;    // positions in the training sample
  FeatureMap feature_map;                  // set for feature models
  Index n_train = 0;
  double rtol = kDefaultRtol;

  Index ell() const { return eigenvalues.size(); }
  bool is_feature_model() const { return !std::holds_alternative<std::monostate>(feature_map); }

  /// Prefix model over the top `ell` components (nested eigenspaces).
  KpcaModel truncated(Index ell) const;
};

/// EKPCA from the full Gram matrix: eigendecomposes
/// G = (1/(n-1)) C_n K C_n, whose nonzero spectrum equals that of
/// (1/(n(n-1))) K H_n, and normalizes coefficients as v / sqrt((n-1) lambda)
/// so the eigenfunctions have unit RKHS norm.
KpcaModel fit_ekpca(const Eigen::MatrixXd& k, Index ell, double rtol = kDefaultRtol);

/// Nystrom EKPCA from the cross Gram matrices: with R = K_mm^{-1/2}
/// (thresholded pseudo-inverse root) eigendecomposes
/// (1/(n(n-1))) R K_mn H_n K_nm R restricted to ran(K_mm^{1/2} H_m) — the
/// subspace the variational problem actually runs over — and maps
/// eigenvectors u to subsample coefficients R u.
KpcaModel fit_nystrom(const Eigen::MatrixXd& k_mm, const Eigen::MatrixXd& k_nm, Index ell,
                      double rtol = kDefaultRtol);

/// Random-feature EKPCA from the n x m feature matrix. The pairwise
/// U-statistic collapses to the unbiased feature covariance
/// (1/(n-1)) Z^T C_n Z, which is eigendecomposed directly.
KpcaModel fit_rff(const Eigen::MatrixXd& z, Index ell, double rtol = kDefaultRtol);

/// Coefficient realization of the projector onto the Nystrom subspace:
/// returns W = H_m (H_m K_mm H_m)^+ H_m, so that the projection of
/// f = sum_j c_j k(., X_j) (full-sample coefficients c) has subsample
/// coefficients W K_mn c. Satisfies W K_mm W = W.
Eigen::MatrixXd pbar_projector_coeffs(const Eigen::MatrixXd& k_mm, double rtol = kDefaultRtol);

/// Eigenfunction values at new points: row t is
/// (phi_1(x_t), ..., phi_ell(x_t)).
Eigen::MatrixXd eigfun_eval(const KpcaModel& model, const KernelSpec& spec,
                            const Eigen::MatrixXd& x);

/// Single-point convenience: the ell-vector (phi_1(x), ..., phi_ell(x)).
Eigen::VectorXd eigfun_eval_at(const KpcaModel& model, const KernelSpec& spec,
                               const Eigen::Ref<const Eigen::RowVectorXd>& point);

/// Low-dimensional representation of each row of x_new; identical to
/// eigfun_eval by the reproducing property.
Eigen::MatrixXd embed(const KpcaModel& model, const KernelSpec& spec,
                      const Eigen::MatrixXd& x_new);

struct FitOptions {
  Index subsample = 0;       // nystrom subsample size m
  Index rf_features = 0;     // rff feature count m
  std::uint64_t seed = 0;    // subsample / feature-map seed
  double rtol = kDefaultRtol;
};

/// Convenience front end: assembles the required matrices for the variant and
/// attaches expansion metadata to the fitted model.
KpcaModel fit(const KernelSpec& spec, const SampleSet& train, Variant variant, Index ell,
              const FitOptions& options = {});

}  // namespace kpca
