#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "kpca/linalg.hpp"

namespace kpca {

enum class KernelKind { gaussian, linear, polynomial, spectral };

std::string to_string(KernelKind kind);
KernelKind kernel_kind_from_string(const std::string& name);

/// Closed-form kernel definition. The spectral kind is the synthetic fixture
/// with a known finite feature expansion,
///     k(x,y) = sum_j lambda_j e_{i_j}(x) e_{i_j}(y),  e_i(x) = sqrt(2) sin(pi i x),
/// over x in [0,1] with basis indices i_j = basis_first + basis_stride * j.
/// The sine basis is orthonormal in L2 of the uniform distribution on [0,1]
/// and has nonzero mean on odd indices, so the mean element does not vanish.
struct KernelSpec {
  KernelKind kind = KernelKind::gaussian;
  double bandwidth = 1.0;  // gaussian
  int degree = 1;          // polynomial
  double offset = 0.0;     // polynomial
  Eigen::VectorXd feature_eigenvalues;  // spectral: strictly positive, strictly descending
  int basis_first = 1;
  int basis_stride = 1;

  static KernelSpec gaussian(double bandwidth);
  static KernelSpec linear();
  static KernelSpec polynomial(int degree, double offset);
  static KernelSpec spectral(Eigen::VectorXd feature_eigenvalues, int basis_first = 1,
                             int basis_stride = 1);
  /// Spectral fixture with lambda_j = j^{-alpha}, j = 1..dim.
  static KernelSpec spectral_power_law(Index dim, double alpha);

  /// sup_x k(x,x). Exactly 1 for gaussian; bounded by 2 * sum(lambda) for the
  /// spectral kind (e_i(x)^2 <= 2). Linear/polynomial kernels are unbounded on
  /// R^d and return +infinity.
  double kappa() const;

  Index feature_dim() const { return feature_eigenvalues.size(); }
  int basis_index(Index j) const { return basis_first + basis_stride * static_cast<int>(j); }

  /// Throws std::invalid_argument when parameters violate their ranges.
  void validate() const;
};

/// Ordered sample X_1..X_n in R^d (one point per row) plus provenance.
struct SampleSet {
  Eigen::MatrixXd points;  // n x d
  std::uint64_t seed = 0;
  std::string source;  // "synthetic" or the originating file path

  Index size() const { return points.rows(); }
  Index dim() const { return points.cols(); }
};

SampleSet sample_uniform01(Index n, std::uint64_t seed);
SampleSet sample_gaussian(Index n, Index d, std::uint64_t seed);

/// Loads a CSV of points, one row per point. A header row is auto-detected by
/// a non-numeric first row. Malformed rows raise std::invalid_argument with
/// the 1-based line number.
SampleSet load_csv(const std::string& path);

double kernel_eval(const KernelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& y);

/// Full Gram matrix K = [k(X_i, X_j)].
Eigen::MatrixXd gram(const KernelSpec& spec, const SampleSet& x);

/// Cross Gram between two point sets: [k(a_i, b_j)], rows over a.
Eigen::MatrixXd gram_between(const KernelSpec& spec, const Eigen::MatrixXd& a,
                             const Eigen::MatrixXd& b);

struct CrossGram {
  Eigen::MatrixXd k_mm;  // m x m principal submatrix at the selected rows
  Eigen::MatrixXd k_nm;  // n x m columns of K at the selected rows
};

/// K_mm and K_nm for a subsample given by distinct in-range indices.
CrossGram gram_cross(const KernelSpec& spec, const SampleSet& x, const std::vector<Index>& rows);

/// m distinct indices drawn uniformly without replacement from {0..n-1},
/// deterministic given the seed. Returned sorted ascending.
std::vector<Index> subsample_uniform(Index n, Index m, std::uint64_t seed);

/// Feature coordinates of the spectral kernel: row t is
/// psi(x_t) = (sqrt(lambda_j) e_{i_j}(x_t))_j, so that K = Psi Psi^T.
Eigen::MatrixXd spectral_feature_coords(const KernelSpec& spec, const Eigen::MatrixXd& x);

/// Values e_{i_j}(x_t) of the raw sine basis (no eigenvalue weights).
Eigen::MatrixXd spectral_basis_eval(const KernelSpec& spec, const Eigen::MatrixXd& x);

/// Random Fourier feature map for the gaussian kernel:
/// phi(x, (w,b)) = sqrt(2) cos(w.x + b) with w ~ N(0, sigma^{-2} I) and
/// b ~ U[0, 2pi).
struct RffMap {
  Eigen::MatrixXd frequencies;  // m x d
  Eigen::VectorXd phases;       // m
  double bandwidth = 1.0;
  std::uint64_t seed = 0;

  Index feature_count() const { return frequencies.rows(); }
  Index dim() const { return frequencies.cols(); }
};

RffMap make_rff_map(Index dim, Index m, double bandwidth, std::uint64_t seed);

/// Feature matrix Z with row t equal to Phi_m(x_t); entries are bounded by
/// sqrt(2/m).
Eigen::MatrixXd rff_features(const RffMap& map, const Eigen::MatrixXd& x);

/// Random feature map for the spectral kernel, sampling basis positions with
/// probability proportional to their eigenvalues:
/// phi(x, j) = sqrt(total_mass) e_{i_j}(x), so E[phi(x,.)phi(y,.)] = k(x,y).
struct SpectralRfMap {
  std::vector<Index> positions;  // sampled positions into feature_eigenvalues
  double total_mass = 0.0;       // sum of feature eigenvalues
  std::uint64_t seed = 0;

  Index feature_count() const { return static_cast<Index>(positions.size()); }
};

SpectralRfMap make_spectral_rf_map(const KernelSpec& spec, Index m, std::uint64_t seed);

Eigen::MatrixXd spectral_rf_features(const SpectralRfMap& map, const KernelSpec& spec,
                                     const Eigen::MatrixXd& x);

/// The identity feature map of the spectral kernel itself (coordinates psi).
/// Used to express population-exact models over the same interface as the
/// sampled maps.
struct ExactSpectralMap {};

using FeatureMap = std::variant<std::monostate, RffMap, SpectralRfMap, ExactSpectralMap>;

/// Dispatches on the map kind; monostate is an error.
Eigen::MatrixXd feature_matrix(const FeatureMap& map, const KernelSpec& spec,
                               const Eigen::MatrixXd& x);

}  // namespace kpca
