#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>

#include "kpca/estimators.hpp"
#include "kpca/oracle.hpp"

namespace kpca {

enum class Norm { H, L2 };

std::string to_string(Norm norm);

/// One reconstruction-error measurement: a Monte Carlo average over fresh
/// test points with its standard error.
struct ReconReport {
  Variant variant = Variant::ekpca;
  Norm norm = Norm::H;
  Index n = 0;       // training sample size
  Index m = 0;       // expansion size (subsample / feature count / n)
  Index ell = 0;
  double t = 0.0;    // theory regularizer attached by sweeps, 0 otherwise
  double estimate = 0.0;
  double std_error = 0.0;
  Index n_test = 0;
  std::uint64_t seed = 0;
};

std::string recon_csv_header();
std::string recon_csv_row(const ReconReport& report);

/// Where the unknown mean element comes from: the exact oracle (spectral
/// kernel only) or a proxy average over an independent sample. Exactly one
/// must be set.
struct MeanSource {
  const OracleSpectrum* oracle = nullptr;
  const SampleSet* proxy = nullptr;

  static MeanSource from_oracle(const OracleSpectrum& o) { return MeanSource{&o, nullptr}; }
  static MeanSource from_proxy(const SampleSet& p) { return MeanSource{nullptr, &p}; }
};

/// Evaluation route. `automatic` picks feature coordinates whenever the
/// kernel is spectral and an oracle is present, and kernel expansions
/// otherwise; the explicit values exist so tests can compare the two.
enum class ReconRoute { automatic, kernel_expansion, feature_coords };

struct ReconOptions {
  ReconRoute route = ReconRoute::automatic;
  std::uint64_t seed = 0;  // recorded in the report
  double t = 0.0;          // recorded in the report
};

/// RKHS-norm reconstruction error: Monte Carlo average over test points y of
///   || (k(.,y) - m_P) - P (k(.,y) - mhat_P) ||_H^2,
/// with mhat_P the training-sample mean. Passing train = nullptr substitutes
/// the exact mean for mhat_P (population fixtures). Undefined for
/// random-feature models.
ReconReport recon_h(const KpcaModel& model, const KernelSpec& spec, const SampleSet* train,
                    const MeanSource& mean, const SampleSet& test,
                    const ReconOptions& options = {});

/// L2(P)-norm reconstruction error for RKHS-expansion models: for each test
/// point the residual g_y is formed as above and ||J g_y||^2 = <g_y, Sigma g_y>
/// is evaluated exactly in feature coordinates (spectral kernel) or as the
/// empirical variance of g_y over the inner sample.
ReconReport recon_l2(const KpcaModel& model, const KernelSpec& spec, const SampleSet* train,
                     const MeanSource& mean, const SampleSet& test,
                     const SampleSet* inner = nullptr, const ReconOptions& options = {});

/// L2(P)-norm reconstruction error for random-feature models: the residual
/// mixes a true-kernel object k(.,y) - m_P with the feature-space
/// reconstruction, and its L2(P) norm is evaluated exactly (spectral kernel)
/// or over the inner sample.
ReconReport recon_rff_l2(const KpcaModel& model, const KernelSpec& spec, const SampleSet* train,
                         const MeanSource& mean, const SampleSet& test,
                         const SampleSet* inner = nullptr, const ReconOptions& options = {});

/// Mean and standard error with pairwise summation, so the reduction order
/// (and hence the output bytes) never depends on scheduling.
struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe pairwise_mean_se(const Eigen::VectorXd& values);

/// Population-exact model over the spectral kernel's own feature map: the
/// top-ell eigenfunctions of Sigma with their exact eigenvalues.
KpcaModel population_model(const OracleSpectrum& oracle, Index ell);

}  // namespace kpca
