#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "kpca/model_io.hpp"
#include "kpca/oracle.hpp"

using namespace kpca;

namespace {

const KernelSpec kSpec = KernelSpec::spectral_power_law(200, 2.0);

}  // namespace

TEST_CASE("ekpca on two points") {
  // single nonzero eigenvalue of C_2 K C_2 is (k11 + k22 - 2 k12)/2, which is
  // also the trace of the two-point estimator
  const KernelSpec spec = KernelSpec::gaussian(1.0);
  const SampleSet x = sample_gaussian(2, 2, 5);
  const Eigen::MatrixXd k = gram(spec, x);
  const KpcaModel model = fit_ekpca(k, 1);
  const double expected = (k(0, 0) + k(1, 1) - 2.0 * k(0, 1)) / 2.0;
  CHECK(model.eigenvalues(0) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("ekpca rejects constant kernels with a rank error") {
  const Eigen::MatrixXd k = Eigen::MatrixXd::Constant(6, 6, 2.5);
  CHECK_THROWS_AS(fit_ekpca(k, 1), RankError);
  try {
    fit_ekpca(k, 1);
  } catch (const RankError& err) {
    CHECK(err.achievable_rank == 0);
  }
}

TEST_CASE("ekpca input validation") {
  const SampleSet x = sample_uniform01(10, 5);
  const Eigen::MatrixXd k = gram(kSpec, x);
  CHECK_THROWS_AS(fit_ekpca(k, 0), std::invalid_argument);
  CHECK_THROWS_AS(fit_ekpca(k, 10), std::invalid_argument);
  CHECK_THROWS_AS(fit_ekpca(Eigen::MatrixXd::Zero(3, 4), 1), std::invalid_argument);
}

TEST_CASE("ekpca eigenvalue sum equals the trace of the centered matrix") {
  const KernelSpec spec = KernelSpec::spectral_power_law(10, 2.0);
  const SampleSet x = sample_uniform01(50, 7);
  const Eigen::MatrixXd k = gram(spec, x);
  const Eigen::MatrixXd g = center_sym(k) / 49.0;
  const KpcaModel model = fit_ekpca(k, 10);  // rank-10 kernel: all mass in 10 components
  CHECK(model.eigenvalues.sum() == doctest::Approx(g.trace()).epsilon(1e-10));
}

TEST_CASE("ekpca full decomposition on a gaussian sample recovers the trace") {
  // a short bandwidth keeps the Gram matrix well conditioned, so all n-1
  // components survive the spectral threshold
  const KernelSpec spec = KernelSpec::gaussian(0.2);
  const SampleSet x = sample_gaussian(50, 2, 9);
  const Eigen::MatrixXd k = gram(spec, x);
  const KpcaModel model = fit_ekpca(k, 49);
  const Eigen::MatrixXd g = center_sym(k) / 49.0;
  CHECK(model.eigenvalues.size() == 49);
  CHECK(model.eigenvalues.sum() == doctest::Approx(g.trace()).epsilon(1e-10));
}

TEST_CASE("ekpca satisfies normalization and eigen-equation contracts") {
  const SampleSet x = sample_uniform01(60, 11);
  const Eigen::MatrixXd k = gram(kSpec, x);
  const KpcaModel model = fit_ekpca(k, 5);

  const Eigen::MatrixXd gram_phi = model.coeffs * k * model.coeffs.transpose();
  CHECK((gram_phi - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() <= 1e-8);

  const Eigen::MatrixXd lhs = center_cols(k * model.coeffs.transpose()) / 59.0;
  for (Index i = 0; i < 5; ++i) {
    CHECK((lhs.col(i) - model.eigenvalues(i) * model.coeffs.row(i).transpose()).norm() <=
          1e-8 * model.eigenvalues(0) * model.coeffs.row(i).norm());
  }
  for (Index i = 1; i < 5; ++i) CHECK(model.eigenvalues(i) < model.eigenvalues(i - 1));
}

TEST_CASE("nystrom two-route eigenvalue identity on a toy problem") {
  // three points 0, 1, 2 on the line with the linear kernel; subsample {0, 1}
  SampleSet x;
  x.points.resize(3, 1);
  x.points << 0.0, 1.0, 2.0;
  const KernelSpec lin = KernelSpec::linear();
  const CrossGram cg = gram_cross(lin, x, {0, 1});

  const KpcaModel model = fit_nystrom(cg.k_mm, cg.k_nm, 1);

  // independent route: nonzero eigenvalues of (1/(n(n-1))) K_tilde H_n
  const Eigen::MatrixXd k_tilde = cg.k_nm * pinv_psd(cg.k_mm) * cg.k_nm.transpose();
  const Eigen::MatrixXd h3 = 3.0 * centering_matrix<double>(3);
  const Eigen::MatrixXd prod = center_sym(k_tilde) * (3.0 / 6.0);
  const SymEigen<double> route2 = sym_eig(prod);
  CHECK(model.eigenvalues(0) == doctest::Approx(route2.eigenvalues(0)).epsilon(1e-10));

  // and against the non-symmetric form itself via its trace over the top space
  const Eigen::EigenSolver<Eigen::MatrixXd> es(k_tilde * h3 / 6.0);
  double top = 0.0;
  for (Index i = 0; i < 3; ++i) top = std::max(top, es.eigenvalues()(i).real());
  CHECK(model.eigenvalues(0) == doctest::Approx(top).epsilon(1e-10));
}

TEST_CASE("nystrom degenerate subsample reproduces ekpca") {
  const SampleSet x = sample_uniform01(50, 13);
  const Eigen::MatrixXd k = gram(kSpec, x);
  const KpcaModel ek = fit_ekpca(k, 4);
  const CrossGram cg = gram_cross(kSpec, x, subsample_uniform(50, 50, 1));
  const KpcaModel ny = fit_nystrom(cg.k_mm, cg.k_nm, 4);
  for (Index i = 0; i < 4; ++i)
    CHECK(ny.eigenvalues(i) == doctest::Approx(ek.eigenvalues(i)).epsilon(1e-8));
}

TEST_CASE("nystrom unit-norm contract and rank errors") {
  const SampleSet x = sample_uniform01(40, 17);
  const CrossGram cg = gram_cross(kSpec, x, subsample_uniform(40, 12, 3));
  const KpcaModel model = fit_nystrom(cg.k_mm, cg.k_nm, 1);
  const double norm = (model.coeffs * cg.k_mm * model.coeffs.transpose())(0, 0);
  CHECK(norm == doctest::Approx(1.0).epsilon(1e-8));

  CHECK_THROWS_AS(fit_nystrom(cg.k_mm, cg.k_nm, 12), std::invalid_argument);  // ell > m-1
  const Eigen::MatrixXd k_const = Eigen::MatrixXd::Constant(12, 12, 1.0);
  const Eigen::MatrixXd k_nm_const = Eigen::MatrixXd::Constant(40, 12, 1.0);
  CHECK_THROWS_AS(fit_nystrom(k_const, k_nm_const, 2), RankError);  // K_mm rank 1 < ell
}

TEST_CASE("rff two-point estimator is the scaled squared difference") {
  Eigen::MatrixXd z(2, 3);
  z << 1.0, -2.0, 0.5, 0.0, 1.0, 2.0;
  const KpcaModel model = fit_rff(z, 1);
  const Eigen::VectorXd diff = (z.row(0) - z.row(1)).transpose();
  CHECK(model.eigenvalues(0) == doctest::Approx(0.5 * diff.squaredNorm()).epsilon(1e-12));
  // eigenvector proportional to the difference
  const double overlap =
      std::abs(model.coeffs.row(0).dot(diff.transpose()) / diff.norm());
  CHECK(overlap == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("rff constant features produce a rank error") {
  const Eigen::MatrixXd z = Eigen::MatrixXd::Constant(8, 4, 1.3);
  CHECK_THROWS_AS(fit_rff(z, 1), RankError);
}

TEST_CASE("rff primal and dual routes agree") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd z(12, 30);  // m > n exercises the dual route
  for (Index i = 0; i < 12; ++i)
    for (Index j = 0; j < 30; ++j) z(i, j) = normal(rng);
  const KpcaModel dual = fit_rff(z, 3);
  // primal reference through the m x m covariance
  const Eigen::MatrixXd zc = center_cols(z);
  const SymEigen<double> eig = sym_eig(Eigen::MatrixXd(zc.transpose() * zc / 11.0));
  for (Index i = 0; i < 3; ++i) {
    CHECK(dual.eigenvalues(i) == doctest::Approx(eig.eigenvalues(i)).epsilon(1e-10));
    const double overlap = std::abs(dual.coeffs.row(i).dot(eig.eigenvectors.col(i)));
    CHECK(overlap == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("eigenfunction evaluation at expansion points") {
  const SampleSet x = sample_uniform01(30, 19);
  const KpcaModel ek = fit(kSpec, x, Variant::ekpca, 3, {});
  const Eigen::MatrixXd k = gram(kSpec, x);
  const Eigen::MatrixXd vals = eigfun_eval(ek, kSpec, x.points);
  CHECK((vals - k * ek.coeffs.transpose()).cwiseAbs().maxCoeff() <= 1e-10);

  FitOptions opts;
  opts.subsample = 10;
  opts.seed = 2;
  const KpcaModel ny = fit(kSpec, x, Variant::nystrom, 3, opts);
  const Eigen::MatrixXd k_mm = gram_between(kSpec, ny.expansion_points, ny.expansion_points);
  const Eigen::MatrixXd sub_vals = eigfun_eval(ny, kSpec, ny.expansion_points);
  CHECK((sub_vals - k_mm * ny.coeffs.transpose()).cwiseAbs().maxCoeff() <= 1e-10);

  CHECK(embed(ek, kSpec, x.points).isApprox(vals, 0.0));
  CHECK(eigfun_eval_at(ek, kSpec, x.points.row(4)).isApprox(vals.row(4).transpose(), 1e-14));
}

TEST_CASE("pbar projector coefficient identities") {
  const SampleSet x = sample_uniform01(25, 29);
  const CrossGram cg = gram_cross(kSpec, x, subsample_uniform(25, 8, 4));
  const Eigen::MatrixXd w = pbar_projector_coeffs(cg.k_mm);

  CHECK((w * cg.k_mm * w - w).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK((w - w.transpose()).cwiseAbs().maxCoeff() <= 1e-12);

  // range vectors are fixed; outputs always have zero coefficient sum
  std::mt19937_64 rng(31);
  std::normal_distribution<double> normal;
  Eigen::VectorXd c(8);
  for (Index i = 0; i < 8; ++i) c(i) = normal(rng);
  const Eigen::VectorXd proj = w * (cg.k_mm * c);
  CHECK(std::abs(proj.sum()) <= 1e-9);
  const Eigen::VectorXd twice = w * (cg.k_mm * proj);
  const Eigen::VectorXd diff = twice - proj;
  CHECK(std::sqrt(std::abs(diff.dot(cg.k_mm * diff))) <= 1e-8);

  // toy m=3 with an explicit constant direction
  SampleSet toy;
  toy.points.resize(3, 1);
  toy.points << 0.2, 0.5, 0.8;
  const Eigen::MatrixXd k3 = gram(kSpec, toy);
  const Eigen::MatrixXd w3 = pbar_projector_coeffs(k3);
  CHECK(std::abs((w3 * k3 * Eigen::VectorXd::Ones(3)).sum()) <= 1e-9);

  CHECK_THROWS_AS(pbar_projector_coeffs(Eigen::MatrixXd::Constant(5, 5, 1.0)), RankError);
}

TEST_CASE("truncated models share the leading components") {
  const SampleSet x = sample_uniform01(40, 37);
  const KpcaModel model = fit(kSpec, x, Variant::ekpca, 6, {});
  const KpcaModel head = model.truncated(2);
  CHECK(head.ell() == 2);
  CHECK(head.eigenvalues(1) == model.eigenvalues(1));
  CHECK(head.coeffs.row(1).isApprox(model.coeffs.row(1), 0.0));
  CHECK(model.truncated(0).ell() == 0);
  CHECK_THROWS_AS(model.truncated(7), std::invalid_argument);
}

TEST_CASE("model JSON round trip is bit faithful") {
  const SampleSet x = sample_uniform01(20, 41);
  FitOptions opts;
  opts.rf_features = 8;
  opts.seed = 3;
  const KpcaModel model = fit(kSpec, x, Variant::rff, 2, opts);
  const std::string text = model_to_json(model, kSpec);
  const SavedModel loaded = model_from_json(text);
  CHECK(loaded.model.eigenvalues.isApprox(model.eigenvalues, 0.0));
  CHECK(loaded.model.coeffs.isApprox(model.coeffs, 0.0));
  CHECK(model_to_json(loaded.model, loaded.kernel) == text);
  CHECK(loaded.kernel.kind == KernelKind::spectral);
  CHECK_THROWS_AS(model_from_json("{ not json"), std::invalid_argument);
  CHECK_THROWS_AS(model_from_json("{\"format\":\"other\"}"), std::invalid_argument);
}

TEST_CASE("fit front end validates variant-specific options") {
  const SampleSet x = sample_uniform01(20, 43);
  CHECK_THROWS_AS(fit(kSpec, x, Variant::nystrom, 2, {}), std::invalid_argument);
  CHECK_THROWS_AS(fit(kSpec, x, Variant::rff, 2, {}), std::invalid_argument);
  FitOptions opts;
  opts.rf_features = 4;
  CHECK_THROWS_AS(fit(KernelSpec::linear(), x, Variant::rff, 2, opts), std::invalid_argument);
}
