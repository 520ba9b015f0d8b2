#include "kpca/verify.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <utility>

#include "kpca/bench.hpp"
#include "kpca/model_io.hpp"

namespace kpca {

namespace {

void expect(bool cond, const std::string& msg) {
  if (!cond) throw std::runtime_error(msg);
}

void expect_near(double a, double b, double tol, const std::string& what) {
  if (!(std::abs(a - b) <= tol)) {
    std::ostringstream os;
    os << what << ": " << a << " vs " << b << " (tol " << tol << ")";
    throw std::runtime_error(os.str());
  }
}

void expect_rel(double a, double b, double rtol, const std::string& what) {
  expect_near(a, b, rtol * std::max({std::abs(a), std::abs(b), 1e-300}), what);
}

Eigen::MatrixXd random_sym(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd a(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) a(i, j) = normal(rng);
  return (a + a.transpose()) / 2.0;
}

Eigen::MatrixXd random_psd(Index n, Index rank, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd b(n, rank);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < rank; ++j) b(i, j) = normal(rng);
  return b * b.transpose();
}

// ---------------------------------------------------------------- linalg ---

void check_centering() {
  for (Index n = 2; n <= 50; ++n) {
    const Eigen::MatrixXd c = centering_matrix<double>(n);
    expect((c * c - c).cwiseAbs().maxCoeff() <= 1e-12, "centering: not idempotent");
    expect((c - c.transpose()).cwiseAbs().maxCoeff() == 0.0, "centering: not symmetric");
    expect((c * Eigen::VectorXd::Ones(n)).cwiseAbs().maxCoeff() <= 1e-12,
           "centering: does not annihilate constants");
    const SymEigen<double> eig = sym_eig(c);
    Index zeros = 0;
    for (Index i = 0; i < n; ++i)
      if (eig.eigenvalues(i) < 0.5) ++zeros;
    expect(zeros == 1, "centering: zero eigenvalue multiplicity must be exactly 1");
  }
}

void check_sym_eig(bool fast) {
  const int reps = fast ? 3 : 10;
  for (int r = 0; r < reps; ++r) {
    const Eigen::MatrixXd a = random_sym(20, 101 + r);
    const SymEigen<double> eig = sym_eig(a);
    for (Index i = 1; i < 20; ++i)
      expect(eig.eigenvalues(i) <= eig.eigenvalues(i - 1), "sym_eig: not descending");
    const Eigen::MatrixXd rec =
        eig.eigenvectors * eig.eigenvalues.asDiagonal() * eig.eigenvectors.transpose();
    expect((rec - a).norm() <= 1e-10 * a.norm(), "sym_eig: reconstruction failed");
    const Eigen::MatrixXd vtv = eig.eigenvectors.transpose() * eig.eigenvectors;
    expect((vtv - Eigen::MatrixXd::Identity(20, 20)).cwiseAbs().maxCoeff() <= 1e-10,
           "sym_eig: eigenvectors not orthonormal");
  }
}

void check_pinv(bool fast) {
  const int reps = fast ? 2 : 6;
  for (int r = 0; r < reps; ++r) {
    for (Index rank : {Index(6), Index(3)}) {
      const Eigen::MatrixXd a = random_psd(6, rank, 211 + r);
      const Eigen::MatrixXd ap = pinv_psd(a);
      expect((a * ap * a - a).norm() <= 1e-8 * a.norm(), "pinv_psd: A A+ A != A");
      expect((ap * a * ap - ap).norm() <= 1e-8 * ap.norm(), "pinv_psd: A+ A A+ != A+");
    }
  }
}

void check_inv_sqrt(bool fast) {
  const int reps = fast ? 2 : 6;
  for (int r = 0; r < reps; ++r) {
    const Eigen::MatrixXd a = random_psd(8, 5, 307 + r);
    const Eigen::MatrixXd rt = inv_sqrt_psd(a);
    const Eigen::MatrixXd ap = pinv_psd(a);
    expect((rt * rt - ap).norm() <= 1e-8 * std::max(1.0, ap.norm()),
           "inv_sqrt_psd: square does not match pseudo-inverse");
    const Eigen::MatrixXd proj = rt * a * rt;
    expect((proj * proj - proj).norm() <= 1e-8 * std::max(1.0, proj.norm()),
           "inv_sqrt_psd: A^{-1/2} A A^{-1/2} is not a projector");
  }
}

// --------------------------------------------------------------- kernels ---

void check_gram_psd() {
  const KernelSpec spectral = KernelSpec::spectral_power_law(50, 2.0);
  const KernelSpec gauss = KernelSpec::gaussian(1.0);
  const SampleSet xs = sample_uniform01(40, 11);
  const SampleSet xg = sample_gaussian(40, 3, 12);
  for (const auto& [spec, x] : {std::pair{&spectral, &xs}, std::pair{&gauss, &xg}}) {
    const Eigen::MatrixXd k = gram(*spec, *x);
    expect((k - k.transpose()).cwiseAbs().maxCoeff() <= 1e-12, "gram: asymmetric");
    const SymEigen<double> eig = sym_eig(k);
    expect(eig.eigenvalues(eig.eigenvalues.size() - 1) >= -1e-10 * eig.eigenvalues(0),
           "gram: negative eigenvalue beyond tolerance");
  }
}

void check_gram_cross() {
  const KernelSpec spec = KernelSpec::gaussian(0.7);
  const SampleSet x = sample_gaussian(30, 2, 21);
  const std::vector<Index> rows = subsample_uniform(30, 8, 5);
  const CrossGram cg = gram_cross(spec, x, rows);
  for (Index j = 0; j < 8; ++j)
    expect((cg.k_nm.row(rows[static_cast<std::size_t>(j)]) - cg.k_mm.row(j)).cwiseAbs().maxCoeff() ==
               0.0,
           "gram_cross: K_nm at subsample rows must equal K_mm exactly");
}

void check_spectral_kappa() {
  const KernelSpec spec = KernelSpec::spectral_power_law(200, 2.0);
  const SampleSet grid{Eigen::VectorXd::LinSpaced(10000, 0.0, 1.0), 0, "grid"};
  const Eigen::VectorXd diag = spectral_feature_coords(spec, grid.points).rowwise().squaredNorm();
  const double grid_max = diag.maxCoeff();
  expect(grid_max <= spec.kappa(), "kappa: grid max exceeds the bound");
  expect(grid_max >= 0.95 * spec.kappa(), "kappa: bound not within 5% of grid max");
}

void check_subsample_frequency(bool fast) {
  const Index n = 1000, m = 100;
  const int reps = fast ? 10000 : 20000;
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(n);
  for (int r = 0; r < reps; ++r)
    for (Index idx : subsample_uniform(n, m, 40000 + static_cast<std::uint64_t>(r))) counts(idx) += 1.0;
  const Eigen::VectorXd freq = counts / static_cast<double>(reps);
  expect((freq.array() - 0.1).abs().maxCoeff() <= 0.01,
         "subsample: inclusion frequency deviates from m/n by more than 0.01");
}

void check_rff_convergence(bool fast) {
  const KernelSpec spec = KernelSpec::gaussian(1.0);
  const SampleSet x = sample_gaussian(100, 2, 77);
  const Eigen::MatrixXd k = gram(spec, x);
  std::vector<Index> sizes = fast ? std::vector<Index>{64, 256, 1024}
                                  : std::vector<Index>{64, 256, 1024, 4096};
  double prev = -1.0, first = 0.0, last = 0.0;
  for (Index m : sizes) {
    const RffMap map = make_rff_map(2, m, 1.0, 99);
    const Eigen::MatrixXd z = rff_features(map, x.points);
    const double err = (z * z.transpose() - k).cwiseAbs().maxCoeff();
    if (prev >= 0.0)
      expect(err <= 2.0 * prev, "rff: Gram error grew by more than the 2x noise band");
    if (prev < 0.0) first = err;
    prev = err;
    last = err;
  }
  expect(last < 0.5 * first, "rff: Gram error did not decrease across the schedule");
}

// ---------------------------------------------------------------- oracle ---

void check_oracle_identities() {
  for (double alpha : {1.5, 2.0, 3.0}) {
    const KernelSpec spec = KernelSpec::spectral_power_law(200, alpha);
    const OracleSpectrum o = build_oracle(spec);
    expect_rel(o.sigma_eigs.sum(), o.feat_eigs.sum() - o.mp_sq_norm, 1e-10,
               "oracle: trace identity");
    for (Index i = 0; i < o.dim(); ++i) {
      expect(o.sigma_eigs(i) <= o.feat_eigs(i) + 1e-12, "oracle: interlacing violated");
      expect(o.sigma_eigs(i) > 0.0, "oracle: Sigma spectrum must be positive");
    }
  }
  // Even-index basis: every basis mean vanishes, so Sigma = C.
  Eigen::VectorXd eigs(20);
  for (Index j = 0; j < 20; ++j) eigs(j) = std::pow(static_cast<double>(j + 1), -2.0);
  const KernelSpec even = KernelSpec::spectral(eigs, 2, 2);
  const OracleSpectrum oe = build_oracle(even);
  expect(oe.mp_sq_norm == 0.0, "oracle: even basis must have zero mean element");
  expect((oe.sigma_eigs - oe.feat_eigs).cwiseAbs().maxCoeff() <= 1e-12,
         "oracle: zero mean must collapse Sigma onto C");
}

void check_effective_dim() {
  const KernelSpec spec = KernelSpec::spectral_power_law(200, 2.0);
  const OracleSpectrum o = build_oracle(spec);
  const double t = o.sigma_eigs(0);
  // dense-matrix route: tr(S (S + tI)^{-1})
  const Eigen::MatrixXd inv =
      (o.sigma + t * Eigen::MatrixXd::Identity(o.dim(), o.dim())).inverse();
  expect_rel(effective_dim(o, t), (o.sigma * inv).trace(), 1e-10,
             "effective_dim: closed form vs dense inverse");
  const double big = 1e6 * o.sigma_eigs(0);
  expect_rel(big * effective_dim(o, big), o.sigma_eigs.sum(), 1e-5,
             "effective_dim: t N(t) must approach tr(Sigma)");
  expect(effective_dim(o, 0.1) > effective_dim(o, 0.2), "effective_dim: not decreasing");
}

void check_effective_dim_infty(bool fast) {
  const KernelSpec spec = KernelSpec::spectral_power_law(200, 2.0);
  const OracleSpectrum o = build_oracle(spec);
  const double coarse = effective_dim_infty(o, spec, 0.01, fast ? 1000 : 10000);
  const double fine = effective_dim_infty(o, spec, 0.01, fast ? 10000 : 100000);
  expect_rel(coarse, fine, 0.01, "effective_dim_infty: grid refinement moved the value by >1%");
  const double big = 1e6;
  const double kappa_grid = effective_dim_infty(o, spec, big, 10000) * big;
  expect_near(kappa_grid, spec.kappa(), 0.05 * spec.kappa(),
              "effective_dim_infty: t N(t) must approach sup k(x,x)");
}

void check_sandwich() {
  const KernelSpec spec = KernelSpec::spectral_power_law(200, 2.0);
  const OracleSpectrum o = build_oracle(spec);
  const SandwichFit fit = sandwich_constants(o, 2.0, 50);
  expect(fit.lo > 0.0 && std::isfinite(fit.hi), "sandwich: refit constants must be positive");
  expect(fit.hi <= 1.5, "sandwich: upper constant exceeded 1.5");
}

// ------------------------------------------------------------ estimators ---

struct Fixture {
  KernelSpec spec = KernelSpec::spectral_power_law(200, 2.0);
  OracleSpectrum oracle;
  SampleSet train;
  Eigen::MatrixXd k;

  Fixture(Index n, std::uint64_t seed) : oracle(build_oracle(spec)), train(sample_uniform01(n, seed)) {
    k = gram(spec, train);
  }
};

void check_gram_orthonormality() {
  const Fixture fx(120, 3001);
  const Index ell = 5;

  const KpcaModel ek = fit_ekpca(fx.k, ell);
  const Eigen::MatrixXd ge = ek.coeffs * fx.k * ek.coeffs.transpose();
  expect((ge - Eigen::MatrixXd::Identity(ell, ell)).cwiseAbs().maxCoeff() <= 1e-8,
         "ekpca: B K B^T != I");

  const std::vector<Index> rows = subsample_uniform(120, 30, 7);
  const CrossGram cg = gram_cross(fx.spec, fx.train, rows);
  const KpcaModel ny = fit_nystrom(cg.k_mm, cg.k_nm, ell);
  const Eigen::MatrixXd gn = ny.coeffs * cg.k_mm * ny.coeffs.transpose();
  expect((gn - Eigen::MatrixXd::Identity(ell, ell)).cwiseAbs().maxCoeff() <= 1e-8,
         "nystrom: B K_mm B^T != I");

  const SpectralRfMap map = make_spectral_rf_map(fx.spec, 64, 9);
  const Eigen::MatrixXd z = spectral_rf_features(map, fx.spec, fx.train.points);
  const KpcaModel rf = fit_rff(z, ell);
  const Eigen::MatrixXd gr = rf.coeffs * rf.coeffs.transpose();
  expect((gr - Eigen::MatrixXd::Identity(ell, ell)).cwiseAbs().maxCoeff() <= 1e-8,
         "rff: B B^T != I");
}

void check_eigen_equations() {
  const Fixture fx(100, 3100);
  const Index n = 100, ell = 4;

  const KpcaModel ek = fit_ekpca(fx.k, ell);
  const Eigen::MatrixXd lhs = center_cols(fx.k * ek.coeffs.transpose()) / double(n - 1);
  for (Index i = 0; i < ell; ++i) {
    const double resid =
        (lhs.col(i) - ek.eigenvalues(i) * ek.coeffs.row(i).transpose()).norm();
    expect(resid <= 1e-8 * ek.eigenvalues(0) * ek.coeffs.row(i).norm(),
           "ekpca: eigen-equation residual too large");
  }

  const std::vector<Index> rows = subsample_uniform(n, 25, 17);
  const CrossGram cg = gram_cross(fx.spec, fx.train, rows);
  const KpcaModel ny = fit_nystrom(cg.k_mm, cg.k_nm, ell);
  // coefficient route: c -> W K_mn (1/(n(n-1))) H_n K_nm (W K_mm c)
  const Eigen::MatrixXd w = pbar_projector_coeffs(cg.k_mm);
  for (Index i = 0; i < ell; ++i) {
    const Eigen::VectorXd c = ny.coeffs.row(i).transpose();
    const Eigen::VectorXd pc = w * (cg.k_mm * c);
    const Eigen::VectorXd full = center_cols(cg.k_nm * pc) * (1.0 / (n - 1));
    const Eigen::VectorXd back = w * (cg.k_nm.transpose() * full);
    const Eigen::VectorXd diff = back - ny.eigenvalues(i) * c;
    const double norm_h = std::sqrt(diff.dot(cg.k_mm * diff));
    expect(norm_h <= 1e-7 * ny.eigenvalues(0),
           "nystrom: projected eigen-equation residual too large");
  }

  const SpectralRfMap map = make_spectral_rf_map(fx.spec, 48, 19);
  const Eigen::MatrixXd z = spectral_rf_features(map, fx.spec, fx.train.points);
  const KpcaModel rf = fit_rff(z, ell);
  const Eigen::MatrixXd zc = center_cols(z);
  const Eigen::MatrixXd cov = zc.transpose() * zc / double(n - 1);
  for (Index i = 0; i < ell; ++i) {
    const Eigen::VectorXd b = rf.coeffs.row(i).transpose();
    expect((cov * b - rf.eigenvalues(i) * b).norm() <= 1e-8 * rf.eigenvalues(0),
           "rff: covariance eigen-equation residual too large");
  }
}

void check_nystrom_degeneracy() {
  for (std::uint64_t seed : {1ULL, 2ULL}) {
    const Fixture fx(60, 3200 + seed);
    const Index n = 60, ell = 4;
    const KpcaModel ek = fit_ekpca(fx.k, ell + 1);
    const std::vector<Index> rows = subsample_uniform(n, n, seed);
    const CrossGram cg = gram_cross(fx.spec, fx.train, rows);
    const KpcaModel ny = fit_nystrom(cg.k_mm, cg.k_nm, ell);
    for (Index i = 0; i < ell; ++i)
      expect_rel(ny.eigenvalues(i), ek.eigenvalues(i), 1e-8, "degeneracy: eigenvalue mismatch");

    const double gap = ek.eigenvalues(ell - 1) - ek.eigenvalues(ell);
    if (gap > 1e-6 * ek.eigenvalues(0)) {
      // principal angles between the two ell-eigenspaces in the Gram metric
      const Eigen::MatrixXd q = ek.coeffs.topRows(ell) * fx.k * ny.coeffs.transpose();
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(q);
      for (Index i = 0; i < ell; ++i) {
        const double angle = std::sqrt(std::max(0.0, 2.0 * (1.0 - svd.singularValues()(i))));
        expect(angle < 1e-6, "degeneracy: principal angle >= 1e-6");
      }
    }
  }
}

void check_eigenvalue_domination(bool fast) {
  const int reps = fast ? 15 : 50;
  for (int r = 0; r < reps; ++r) {
    const Fixture fx(50, 3300 + r);
    const Index ell = 4;
    const KpcaModel ek = fit_ekpca(fx.k, ell);
    const std::vector<Index> rows = subsample_uniform(50, 20, 900 + r);
    const CrossGram cg = gram_cross(fx.spec, fx.train, rows);
    const KpcaModel ny = fit_nystrom(cg.k_mm, cg.k_nm, ell);
    for (Index i = 0; i < ell; ++i)
      expect(ny.eigenvalues(i) <= ek.eigenvalues(i) * (1.0 + 1e-9) + 1e-14,
             "domination: compressed eigenvalue exceeded the full one");
  }
}

void check_eigenvalue_perturbation(bool fast) {
  const int reps = fast ? 8 : 20;
  const Index n = 100, m = 20, ell = 3;
  for (int r = 0; r < reps; ++r) {
    const Fixture fx(n, 3400 + r);
    const std::vector<Index> rows = subsample_uniform(n, m, 1300 + r);
    const CrossGram cg = gram_cross(fx.spec, fx.train, rows);
    const double scale = 1.0 / (double(n) * double(n - 1));

    const SymEigen<double> full = sym_eig(center_sym(fx.k) * (scale * n));
    const Eigen::MatrixXd r_inv = inv_sqrt_psd(cg.k_mm);
    const Eigen::MatrixXd y = center_cols(cg.k_nm) * r_inv;
    const SymEigen<double> sub = sym_eig(Eigen::MatrixXd(y.transpose() * y * scale * n));

    const double lam_full = full.eigenvalues(ell);
    const double lam_sub = sub.eigenvalues.size() > ell ? sub.eigenvalues(ell) : 0.0;

    const Eigen::MatrixXd b = cg.k_nm * r_inv;
    const Eigen::MatrixXd k_tilde = b * b.transpose();
    const Eigen::MatrixXd h = double(n) * centering_matrix<double>(n);
    const double bound = scale * operator_norm((k_tilde - fx.k) * h);
    expect(std::abs(lam_sub - lam_full) <= bound * (1.0 + 1e-9) + 1e-14,
           "perturbation: eigenvalue gap exceeded the operator-norm bound");
  }
}

void check_ustat_unbiased(bool fast) {
  const KernelSpec spec = KernelSpec::spectral_power_law(5, 2.0);
  const OracleSpectrum o = build_oracle(spec);
  const int reps = fast ? 800 : 2000;
  const Index n = 20, d = 5;

  Eigen::MatrixXd mean_u = Eigen::MatrixXd::Zero(d, d), msq_u = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd mean_v = Eigen::VectorXd::Zero(d), msq_v = Eigen::VectorXd::Zero(d);
  for (int r = 0; r < reps; ++r) {
    const SampleSet x = sample_uniform01(n, 5000 + static_cast<std::uint64_t>(r));
    const Eigen::MatrixXd psi_c = center_cols(spectral_feature_coords(spec, x.points));
    const Eigen::MatrixXd u = psi_c.transpose() * psi_c / double(n - 1);
    mean_u += u;
    msq_u += u.cwiseProduct(u);
    const Eigen::VectorXd v = u.diagonal() * (double(n - 1) / double(n));
    mean_v += v;
    msq_v += v.cwiseProduct(v);
  }
  mean_u /= reps;
  mean_v /= reps;
  const Eigen::MatrixXd se_u =
      ((msq_u / reps - mean_u.cwiseProduct(mean_u)) / double(reps - 1)).cwiseSqrt();
  const Eigen::VectorXd se_v =
      ((msq_v / reps - mean_v.cwiseProduct(mean_v)) / double(reps - 1)).cwiseSqrt();

  for (Index i = 0; i < d; ++i) {
    for (Index j = 0; j < d; ++j)
      expect(std::abs(mean_u(i, j) - o.sigma(i, j)) <= 3.0 * se_u(i, j) + 1e-12,
             "u-statistic: entry deviates from the population matrix by more than 3 SE");
    // The biased (uncentered-average) version underestimates the diagonal.
    expect(mean_v(i) - o.sigma(i, i) < -3.0 * se_v(i),
           "v-statistic: diagonal bias is not significantly negative");
  }
}

void check_rff_collapse() {
  std::mt19937_64 rng(71);
  std::normal_distribution<double> normal;
  const Index n = 5, m = 3;
  Eigen::MatrixXd z(n, m);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < m; ++j) z(i, j) = normal(rng);
  Eigen::MatrixXd pairwise = Eigen::MatrixXd::Zero(m, m);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const Eigen::VectorXd diff = z.row(i) - z.row(j);
      pairwise += diff * diff.transpose();
    }
  pairwise /= 2.0 * n * (n - 1);
  const Eigen::MatrixXd zc = center_cols(z);
  const Eigen::MatrixXd direct = zc.transpose() * zc / double(n - 1);
  expect((pairwise - direct).cwiseAbs().maxCoeff() <= 1e-12,
         "rff: pairwise U-statistic does not collapse to the centered covariance");
}

void check_pbar() {
  const Fixture fx(40, 3600);
  const std::vector<Index> rows = subsample_uniform(40, 10, 23);
  const CrossGram cg = gram_cross(fx.spec, fx.train, rows);
  const Eigen::MatrixXd w = pbar_projector_coeffs(cg.k_mm);
  expect((w * cg.k_mm * w - w).cwiseAbs().maxCoeff() <= 1e-8 * std::max(1.0, w.cwiseAbs().maxCoeff()),
         "pbar: W K W != W");

  // The projector fixes elements of its range: coefficients of the form W K c.
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  Eigen::VectorXd c(10);
  for (Index i = 0; i < 10; ++i) c(i) = normal(rng);
  const Eigen::VectorXd in_range = w * (cg.k_mm * c);
  const Eigen::VectorXd again = w * (cg.k_mm * in_range);
  const Eigen::VectorXd diff = again - in_range;
  const double h_norm = std::sqrt(std::abs(diff.dot(cg.k_mm * diff)));
  expect(h_norm <= 1e-8, "pbar: projector does not fix its range");

  const Eigen::MatrixXd random_k = random_psd(6, 6, 31);
  const Eigen::MatrixXd w2 = pbar_projector_coeffs(random_k);
  expect((w2 * random_k * w2 - w2).cwiseAbs().maxCoeff() <= 1e-8,
         "pbar: idempotency on a random PSD matrix");
}

void check_model_roundtrip() {
  const Fixture fx(30, 3700);
  const KpcaModel ek = fit(fx.spec, fx.train, Variant::ekpca, 3, {});
  FitOptions ny_opts;
  ny_opts.subsample = 12;
  ny_opts.seed = 4;
  const KpcaModel ny = fit(fx.spec, fx.train, Variant::nystrom, 3, ny_opts);
  FitOptions rf_opts;
  rf_opts.rf_features = 16;
  rf_opts.seed = 4;
  const KpcaModel rf = fit(fx.spec, fx.train, Variant::rff, 3, rf_opts);

  for (const KpcaModel* model : {&ek, &ny, &rf}) {
    const std::string text = model_to_json(*model, fx.spec);
    const SavedModel loaded = model_from_json(text);
    expect(loaded.model.eigenvalues.size() == model->eigenvalues.size() &&
               loaded.model.eigenvalues.isApprox(model->eigenvalues, 0.0),
           "serialization: eigenvalues not bit-identical");
    expect(loaded.model.coeffs.isApprox(model->coeffs, 0.0),
           "serialization: coefficients not bit-identical");
    expect(model_to_json(loaded.model, loaded.kernel) == text,
           "serialization: second round trip changed bytes");
  }
}

// ------------------------------------------------------------------ recon ---

void check_recon_trace_identity(bool fast) {
  const KernelSpec spec = KernelSpec::spectral_power_law(200, 2.0);
  const OracleSpectrum o = build_oracle(spec);
  const Index n_test = fast ? 20000 : 100000;
  const SampleSet test = sample_uniform01(n_test, 606);
  const KpcaModel empty = population_model(o, 0);
  const MeanSource mean = MeanSource::from_oracle(o);

  const ReconReport rh = recon_h(empty, spec, nullptr, mean, test);
  expect_near(rh.estimate, o.sigma_eigs.sum(), 3.0 * rh.std_error,
              "recon_h at ell=0: expected tr(Sigma)");
  const ReconReport rl = recon_l2(empty, spec, nullptr, mean, test);
  expect_near(rl.estimate, o.sigma_eigs.squaredNorm(), 3.0 * rl.std_error,
              "recon_l2 at ell=0: expected tr(Sigma^2)");
}

void check_recon_population_tails(bool fast) {
  const KernelSpec spec = KernelSpec::spectral_power_law(200, 2.0);
  const OracleSpectrum o = build_oracle(spec);
  const Index n_test = fast ? 20000 : 100000;
  const SampleSet test = sample_uniform01(n_test, 707);
  const MeanSource mean = MeanSource::from_oracle(o);
  for (Index ell : {Index(1), Index(3), Index(10)}) {
    const KpcaModel model = population_model(o, ell);
    const PopulationRecon tails = population_recon(o, ell);
    const ReconReport rh = recon_h(model, spec, nullptr, mean, test);
    expect_near(rh.estimate, tails.h_tail, 3.0 * rh.std_error,
                "population model: H error must equal the eigenvalue tail");
    const ReconReport rl = recon_l2(model, spec, nullptr, mean, test);
    expect_near(rl.estimate, tails.l2_tail, 3.0 * rl.std_error,
                "population model: L2 error must equal the squared-eigenvalue tail");
  }
}

void check_recon_lower_bounds(bool fast) {
  const KernelSpec spec = KernelSpec::spectral_power_law(200, 2.0);
  const OracleSpectrum o = build_oracle(spec);
  const MeanSource mean = MeanSource::from_oracle(o);
  const Index n = 200, ell = 4, m = 100;
  const int reps = fast ? 2 : 5;
  const PopulationRecon tails = population_recon(o, ell);
  for (int r = 0; r < reps; ++r) {
    const SampleSet train = sample_uniform01(n, 800 + r);
    const SampleSet test = sample_uniform01(4000, 9000 + r);
    const KpcaModel ek = fit(spec, train, Variant::ekpca, ell, {});
    FitOptions opts;
    opts.subsample = m;
    opts.seed = 31 + r;
    const KpcaModel ny = fit(spec, train, Variant::nystrom, ell, opts);

    const ReconReport re = recon_h(ek, spec, &train, mean, test);
    expect(re.estimate >= tails.h_tail - 3.0 * re.std_error,
           "lower bound: ekpca H error fell below the population tail");
    const ReconReport rn = recon_h(ny, spec, &train, mean, test);
    expect(rn.estimate >= tails.h_tail - 3.0 * rn.std_error,
           "lower bound: nystrom H error fell below the population tail");
    const ReconReport tn = recon_l2(ny, spec, &train, mean, test);
    expect(tn.estimate >= tails.l2_tail - 3.0 * tn.std_error,
           "lower bound: nystrom L2 error fell below the population tail");
  }
}

void check_recon_monotone() {
  const KernelSpec spec = KernelSpec::spectral_power_law(200, 2.0);
  const OracleSpectrum o = build_oracle(spec);
  const MeanSource mean = MeanSource::from_oracle(o);
  const SampleSet train = sample_uniform01(300, 41);
  const SampleSet test = sample_uniform01(4000, 42);
  const KpcaModel model = fit(spec, train, Variant::ekpca, 8, {});
  double prev = std::numeric_limits<double>::infinity();
  for (Index ell = 1; ell <= 8; ++ell) {
    const ReconReport r = recon_h(model.truncated(ell), spec, &train, mean, test);
    expect(r.estimate <= prev + 1e-12, "monotonicity: H error increased with ell");
    prev = r.estimate;
  }
}

void check_recon_route_equivalence() {
  const KernelSpec spec = KernelSpec::spectral_power_law(200, 2.0);
  const OracleSpectrum o = build_oracle(spec);
  const MeanSource mean = MeanSource::from_oracle(o);
  const SampleSet train = sample_uniform01(250, 51);
  const SampleSet test = sample_uniform01(2000, 52);
  const KpcaModel model = fit(spec, train, Variant::ekpca, 5, {});

  ReconOptions kernel_route, feature_route;
  kernel_route.route = ReconRoute::kernel_expansion;
  feature_route.route = ReconRoute::feature_coords;
  const ReconReport a = recon_h(model, spec, &train, mean, test, kernel_route);
  const ReconReport b = recon_h(model, spec, &train, mean, test, feature_route);
  expect_rel(a.estimate, b.estimate, 1e-6, "route equivalence: recon_h routes disagree");
}

void check_recon_variant_degeneracy() {
  const KernelSpec spec = KernelSpec::spectral_power_law(200, 2.0);
  const OracleSpectrum o = build_oracle(spec);
  const MeanSource mean = MeanSource::from_oracle(o);
  const SampleSet train = sample_uniform01(80, 61);
  const SampleSet test = sample_uniform01(3000, 62);
  const KpcaModel ek = fit(spec, train, Variant::ekpca, 4, {});
  FitOptions opts;
  opts.subsample = 80;
  const KpcaModel ny = fit(spec, train, Variant::nystrom, 4, opts);
  const ReconReport a = recon_h(ek, spec, &train, mean, test);
  const ReconReport b = recon_h(ny, spec, &train, mean, test);
  expect(std::abs(a.estimate - b.estimate) <= 1e-6 * std::abs(a.estimate),
         "variant degeneracy: m=n reconstruction errors differ");
  const ReconReport a2 = recon_l2(ek, spec, &train, mean, test);
  const ReconReport b2 = recon_l2(ny, spec, &train, mean, test);
  expect(std::abs(a2.estimate - b2.estimate) <= 1e-6 * std::abs(a2.estimate),
         "variant degeneracy: m=n L2 errors differ");
}

void check_recon_rff(bool fast) {
  const KernelSpec spec = KernelSpec::spectral_power_law(200, 2.0);
  const OracleSpectrum o = build_oracle(spec);
  const MeanSource mean = MeanSource::from_oracle(o);
  const SampleSet train = sample_uniform01(300, 71);
  const SampleSet test = sample_uniform01(3000, 72);
  const SampleSet inner = sample_uniform01(fast ? 3000 : 6000, 73);

  FitOptions opts;
  opts.rf_features = 256;
  opts.seed = 5;
  const KpcaModel rf = fit(spec, train, Variant::rff, 3, opts);
  ReconOptions exact_route, inner_route;
  exact_route.route = ReconRoute::feature_coords;
  inner_route.route = ReconRoute::kernel_expansion;
  const ReconReport a = recon_rff_l2(rf, spec, &train, mean, test, nullptr, exact_route);
  const ReconReport b = recon_rff_l2(rf, spec, &train, mean, test, &inner, inner_route);
  expect_near(a.estimate, b.estimate,
              3.0 * std::sqrt(a.std_error * a.std_error + b.std_error * b.std_error) +
                  0.05 * a.estimate,
              "rff recon: exact and inner-sample routes disagree");

  // ell = 0 reduces to tr(Sigma^2).
  const ReconReport zero = recon_rff_l2(rf.truncated(0), spec, &train, mean, test);
  expect_near(zero.estimate, o.sigma_eigs.squaredNorm(), 3.0 * zero.std_error,
              "rff recon at ell=0: expected tr(Sigma^2)");

  // Noise features cannot beat the population lower bound.
  const RffMap noise = make_rff_map(1, 16, 1e-4, 99);
  const Eigen::MatrixXd z = rff_features(noise, train.points);
  KpcaModel garbage = fit_rff(z, 3);
  garbage.feature_map = noise;
  const PopulationRecon tails = population_recon(o, 3);
  const ReconReport g = recon_rff_l2(garbage, spec, &train, mean, test, &inner);
  expect(g.estimate >= 0.25 * tails.l2_tail - 3.0 * g.std_error,
         "rff recon: noise-feature error fell below a quarter of the tail");
}

void check_recon_rff_large_m() {
  const KernelSpec spec = KernelSpec::spectral_power_law(200, 2.0);
  const OracleSpectrum o = build_oracle(spec);
  const MeanSource mean = MeanSource::from_oracle(o);
  const SampleSet train = sample_uniform01(400, 81);
  const SampleSet test = sample_uniform01(4000, 82);

  const KpcaModel ek = fit(spec, train, Variant::ekpca, 3, {});
  FitOptions opts;
  opts.rf_features = 4096;
  opts.seed = 6;
  const KpcaModel rf = fit(spec, train, Variant::rff, 3, opts);
  const ReconReport a = recon_l2(ek, spec, &train, mean, test);
  const ReconReport b = recon_rff_l2(rf, spec, &train, mean, test);
  expect_near(a.estimate, b.estimate,
              3.0 * std::sqrt(a.std_error * a.std_error + b.std_error * b.std_error) +
                  0.05 * std::max(a.estimate, b.estimate),
              "rff recon: large-m error does not approach the exact-kernel error");
}

// ------------------------------------------------------------------ bench ---

ExperimentConfig tiny_config() {
  std::istringstream in(
      "kernel = spectral\nalpha = 2.0\nfeatures = 50\ntheta = 0.5\n"
      "n = 40 60\ntrials = 2\nvariants = ekpca nystrom\nnorms = H L2\n"
      "m_rule = fixed\nm_fixed = 1000\nn_test = 2000\nseed = 3\n");
  return ExperimentConfig::parse(in, "<tiny>");
}

void check_sweep_determinism() {
  const ExperimentConfig cfg = tiny_config();
  const SweepResult a = run_sweep(cfg);
  const SweepResult b = run_sweep(cfg);
  expect(rows_csv(a) == rows_csv(b), "sweep: identical config+seed produced different bytes");
  expect(theory_csv(a) == theory_csv(b), "sweep: theory log not deterministic");
}

void check_rate_fit() {
  ExperimentConfig cfg = tiny_config();
  cfg.n_schedule = {100, 200, 400, 800};
  std::vector<SweepRow> rows;
  for (Index n : cfg.n_schedule) {
    SweepRow row;
    row.variant = Variant::ekpca;
    row.norm = Norm::H;
    row.n = n;
    row.estimate = std::pow(static_cast<double>(n), -0.25);
    rows.push_back(row);
  }
  const RateFit fit = fit_rate(rows, Variant::ekpca, Norm::H, cfg);
  expect_near(fit.slope, -0.25, 1e-12, "rate fit: exact power law not recovered");
  expect(fit.pass, "rate fit: exact power law must pass");

  for (SweepRow& row : rows) row.estimate = 0.7;
  const RateFit flat = fit_rate(rows, Variant::ekpca, Norm::H, cfg);
  expect_near(flat.slope, 0.0, 1e-12, "rate fit: constant rows must give slope 0");

  bool threw = false;
  try {
    fit_rate(std::vector<SweepRow>(rows.begin(), rows.begin() + 2), Variant::ekpca, Norm::H, cfg);
  } catch (const std::invalid_argument&) {
    threw = true;
  }
  expect(threw, "rate fit: fewer than 3 n values must be rejected");
}

void check_sweep_degenerate_m() {
  const ExperimentConfig cfg = tiny_config();
  const SweepResult result = run_sweep(cfg);
  for (const SweepRow& row : result.rows) {
    if (row.variant != Variant::nystrom) continue;
    for (const SweepRow& other : result.rows) {
      if (other.variant == Variant::ekpca && other.norm == row.norm && other.n == row.n &&
          other.trial == row.trial) {
        expect(std::abs(row.estimate - other.estimate) <= 1e-6 * std::abs(other.estimate),
               "sweep: fixed m=n nystrom rows do not match ekpca rows");
      }
    }
  }
}

}  // namespace

std::vector<Check> verification_checks(bool fast) {
  std::vector<Check> checks = {
      {"centering-projector", "C_n is a symmetric idempotent with nullity exactly 1",
       check_centering},
      {"sym-eig-reconstruction", "V diag(w) V^T = A and V^T V = I to 1e-10",
       [fast] { check_sym_eig(fast); }},
      {"pinv-penrose", "A A+ A = A and A+ A A+ = A+ on (rank-deficient) PSD inputs",
       [fast] { check_pinv(fast); }},
      {"inv-sqrt-square", "inv_sqrt(A)^2 = pinv(A); A^{-1/2} A A^{-1/2} is a projector",
       [fast] { check_inv_sqrt(fast); }},
      {"gram-psd", "Gram matrices symmetric to 1e-12 and PSD to -1e-10 lambda_max",
       check_gram_psd},
      {"gram-cross-consistency", "K_nm restricted to the subsample rows equals K_mm exactly",
       check_gram_cross},
      {"spectral-kappa", "closed-form kappa within 5% of the grid max of k(x,x)",
       check_spectral_kappa},
      {"subsample-frequency", "each index appears with frequency m/n +- 0.01",
       [fast] { check_subsample_frequency(fast); }},
      {"rff-gram-convergence", "max |Z Z^T - K| decreases along the feature schedule",
       [fast] { check_rff_convergence(fast); }},
      {"oracle-identities",
       "trace identity, interlacing under the rank-one downdate, positive spectrum",
       check_oracle_identities},
      {"effective-dim", "closed form matches dense tr(S(S+tI)^{-1}); t N(t) -> tr(Sigma)",
       check_effective_dim},
      {"effective-dim-infty", "grid value stable under 10x refinement; t N(t) -> sup k(x,x)",
       [fast] { check_effective_dim_infty(fast); }},
      {"sigma-decay-sandwich", "power-law envelope constants of the Sigma spectrum",
       check_sandwich},
      {"gram-orthonormality", "fitted eigenfunctions orthonormal: B K_exp B^T = I to 1e-8",
       check_gram_orthonormality},
      {"eigen-equations", "coefficient-space eigen-equation residuals below 1e-8 lambda_1",
       check_eigen_equations},
      {"nystrom-degeneracy", "m=n reproduces eigenvalues to 1e-8 and eigenspaces to 1e-6",
       check_nystrom_degeneracy},
      {"eigenvalue-domination", "subspace-compressed eigenvalues never exceed the full ones",
       [fast] { check_eigenvalue_domination(fast); }},
      {"eigenvalue-perturbation",
       "|lambda_tilde - lambda_hat| bounded by the scaled operator norm of (K_tilde - K) H_n",
       [fast] { check_eigenvalue_perturbation(fast); }},
      {"ustat-unbiased",
       "averaged U-statistic matches the population covariance; biased version dips on the "
       "diagonal",
       [fast] { check_ustat_unbiased(fast); }},
      {"rff-collapse", "pairwise difference sum equals the centered feature covariance",
       check_rff_collapse},
      {"pbar-projector", "W K_mm W = W and the projector fixes its range", check_pbar},
      {"model-roundtrip", "JSON serialization round-trips every floating value bit for bit",
       check_model_roundtrip},
      {"recon-trace-identity", "ell=0 errors equal tr(Sigma) and tr(Sigma^2) within 3 SE",
       [fast] { check_recon_trace_identity(fast); }},
      {"recon-population-tails",
       "population model errors equal the eigenvalue tails within 3 SE",
       [fast] { check_recon_population_tails(fast); }},
      {"recon-lower-bounds", "estimated errors never fall below the population tails minus 3 SE",
       [fast] { check_recon_lower_bounds(fast); }},
      {"recon-monotone-ell", "H-norm error non-increasing over nested eigenspaces",
       check_recon_monotone},
      {"recon-route-equivalence", "kernel-expansion and feature-coordinate routes agree to 1e-6",
       check_recon_route_equivalence},
      {"recon-variant-degeneracy", "m=n reconstruction errors agree to 1e-6 relative",
       check_recon_variant_degeneracy},
      {"recon-rff", "random-feature L2 recon: route agreement, ell=0 identity, noise lower bound",
       [fast] { check_recon_rff(fast); }},
      {"sweep-determinism", "identical config and seed produce byte-identical outputs",
       check_sweep_determinism},
      {"rate-fit", "log-log least squares recovers exact power laws and rejects short groups",
       check_rate_fit},
      {"sweep-degenerate-m", "fixed m=n sweeps give matching nystrom and ekpca rows",
       check_sweep_degenerate_m},
  };
  if (!fast)
    checks.push_back({"recon-rff-large-m",
                      "random-feature L2 error approaches the exact-kernel error as m grows",
                      check_recon_rff_large_m});
  return checks;
}

int run_verification(bool fast, std::ostream& out) {
  const std::vector<Check> checks = verification_checks(fast);
  int failures = 0;
  std::size_t width = 0;
  for (const Check& check : checks) width = std::max(width, check.name.size());
  for (const Check& check : checks) {
    std::string status = "PASS";
    std::string detail = check.property;
    try {
      check.run();
    } catch (const std::exception& err) {
      status = "FAIL";
      detail = err.what();
      ++failures;
    }
    out << std::left << std::setw(static_cast<int>(width) + 2) << check.name << status << "  "
        << detail << '\n';
  }
  out << (failures == 0 ? "all checks passed" : std::to_string(failures) + " check(s) failed")
      << " (" << checks.size() << " total)\n";
  return failures;
}

}  // namespace kpca
