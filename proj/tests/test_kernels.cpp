#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <numbers>

#include "kpca/kernels.hpp"
#include "kpca/linalg.hpp"

using namespace kpca;

TEST_CASE("kernel_eval closed forms") {
  const KernelSpec g = KernelSpec::gaussian(1.0);
  Eigen::VectorXd x(2), y(2);
  x << 0.3, -0.7;
  CHECK(kernel_eval(g, x, x) == doctest::Approx(1.0));

  const KernelSpec lin = KernelSpec::linear();
  x << 1.0, 2.0;
  y << 3.0, 4.0;
  CHECK(kernel_eval(lin, x, y) == doctest::Approx(11.0));

  // two-feature spectral kernel at x = y = 0.5: e_1 = sqrt(2), e_2 = 0
  Eigen::VectorXd eigs(2);
  eigs << 1.0, 0.5;
  const KernelSpec spec = KernelSpec::spectral(eigs);
  Eigen::VectorXd half(1);
  half << 0.5;
  CHECK(kernel_eval(spec, half, half) == doctest::Approx(2.0));
}

TEST_CASE("spectral kernel domain and parameter validation") {
  Eigen::VectorXd eigs(2);
  eigs << 1.0, 0.5;
  const KernelSpec spec = KernelSpec::spectral(eigs);
  Eigen::VectorXd out(1);
  out << 1.5;
  CHECK_THROWS_AS(kernel_eval(spec, out, out), std::invalid_argument);

  Eigen::VectorXd bad(2);
  bad << 0.5, 1.0;  // ascending
  CHECK_THROWS_AS(KernelSpec::spectral(bad), std::invalid_argument);
  Eigen::VectorXd zero(1);
  zero << 0.0;
  CHECK_THROWS_AS(KernelSpec::spectral(zero), std::invalid_argument);
  CHECK_THROWS_AS(KernelSpec::gaussian(0.0), std::invalid_argument);
  CHECK_THROWS_AS(KernelSpec::polynomial(0, 1.0), std::invalid_argument);
}

TEST_CASE("gram basics") {
  const KernelSpec spec = KernelSpec::gaussian(0.8);
  SampleSet one;
  one.points = Eigen::MatrixXd::Constant(1, 2, 0.4);
  const Eigen::MatrixXd k1 = gram(spec, one);
  CHECK(k1.rows() == 1);
  CHECK(k1(0, 0) == doctest::Approx(1.0));

  const SampleSet x = sample_gaussian(10, 2, 17);
  const Eigen::MatrixXd k = gram(spec, x);
  CHECK((k - k.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
  const SymEigen<double> eig = sym_eig(k);
  CHECK(eig.eigenvalues(9) >= -1e-10 * eig.eigenvalues(0));
}

TEST_CASE("gram matches kernel_eval entrywise") {
  for (const KernelSpec& spec :
       {KernelSpec::gaussian(0.6), KernelSpec::linear(), KernelSpec::polynomial(2, 1.0)}) {
    const SampleSet x = sample_gaussian(7, 3, 23);
    const Eigen::MatrixXd k = gram(spec, x);
    for (Index i = 0; i < 7; ++i)
      for (Index j = 0; j < 7; ++j)
        CHECK(k(i, j) ==
              doctest::Approx(kernel_eval(spec, x.points.row(i), x.points.row(j))).epsilon(1e-12));
  }
  const KernelSpec spec = KernelSpec::spectral_power_law(30, 2.0);
  const SampleSet u = sample_uniform01(7, 29);
  const Eigen::MatrixXd k = gram(spec, u);
  for (Index i = 0; i < 7; ++i)
    for (Index j = 0; j < 7; ++j)
      CHECK(k(i, j) ==
            doctest::Approx(kernel_eval(spec, u.points.row(i), u.points.row(j))).epsilon(1e-12));
}

TEST_CASE("gram_cross degenerate and consistency cases") {
  const KernelSpec spec = KernelSpec::gaussian(1.0);
  const SampleSet x = sample_gaussian(12, 2, 31);
  const Eigen::MatrixXd k = gram(spec, x);

  std::vector<Index> all(12);
  for (Index i = 0; i < 12; ++i) all[static_cast<std::size_t>(i)] = i;
  const CrossGram cg = gram_cross(spec, x, all);
  CHECK((cg.k_mm - k).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((cg.k_nm - k).cwiseAbs().maxCoeff() <= 1e-12);

  const std::vector<Index> rows = {1, 4, 7};
  const CrossGram sub = gram_cross(spec, x, rows);
  for (Index j = 0; j < 3; ++j)
    CHECK((sub.k_nm.row(rows[static_cast<std::size_t>(j)]) - sub.k_mm.row(j)).cwiseAbs().maxCoeff() ==
          0.0);

  CHECK_THROWS_AS(gram_cross(spec, x, {1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(gram_cross(spec, x, {12}), std::invalid_argument);
  CHECK_THROWS_AS(gram_cross(spec, x, {}), std::invalid_argument);
}

TEST_CASE("subsample_uniform edge cases and determinism") {
  const std::vector<Index> full = subsample_uniform(5, 5, 3);
  CHECK(full == std::vector<Index>{0, 1, 2, 3, 4});
  CHECK(subsample_uniform(1, 1, 9) == std::vector<Index>{0});
  CHECK_THROWS_AS(subsample_uniform(3, 4, 0), std::invalid_argument);
  CHECK(subsample_uniform(100, 10, 7) == subsample_uniform(100, 10, 7));
  CHECK(subsample_uniform(100, 10, 7) != subsample_uniform(100, 10, 8));
}

TEST_CASE("spectral kappa bound") {
  const KernelSpec spec = KernelSpec::spectral_power_law(100, 2.0);
  const Eigen::MatrixXd grid = Eigen::VectorXd::LinSpaced(10001, 0.0, 1.0);
  const Eigen::VectorXd diag = spectral_feature_coords(spec, grid).rowwise().squaredNorm();
  CHECK(diag.maxCoeff() <= spec.kappa() * (1.0 + 1e-12));
  CHECK(diag.maxCoeff() >= 0.95 * spec.kappa());
}

TEST_CASE("rff features: bounds and fixed-map values") {
  RffMap map;
  map.frequencies = Eigen::MatrixXd::Zero(1, 1);
  map.phases = Eigen::VectorXd::Zero(1);
  map.bandwidth = 1.0;
  Eigen::MatrixXd x(3, 1);
  x << -1.0, 0.0, 2.0;
  const Eigen::MatrixXd z = rff_features(map, x);
  for (Index i = 0; i < 3; ++i) CHECK(z(i, 0) == doctest::Approx(std::numbers::sqrt2));

  const RffMap big = make_rff_map(2, 32, 1.0, 11);
  const Eigen::MatrixXd zb = rff_features(big, sample_gaussian(50, 2, 12).points);
  CHECK(zb.cwiseAbs().maxCoeff() <= std::sqrt(2.0 / 32.0) + 1e-12);
}

TEST_CASE("rff map approximates the gaussian kernel") {
  const KernelSpec spec = KernelSpec::gaussian(1.0);
  const RffMap map = make_rff_map(2, 4096, 1.0, 13);
  const SampleSet x = sample_gaussian(20, 2, 14);
  const Eigen::MatrixXd z = rff_features(map, x.points);
  const Eigen::MatrixXd approx = z * z.transpose();
  const Eigen::MatrixXd exact = gram(spec, x);
  double total = 0.0;
  int count = 0;
  for (Index i = 0; i < 20; ++i)
    for (Index j = i + 1; j < 20; ++j) {
      total += std::abs(approx(i, j) - exact(i, j));
      ++count;
    }
  CHECK(total / count <= 0.05);
}

TEST_CASE("spectral random feature map approximates the spectral kernel") {
  const KernelSpec spec = KernelSpec::spectral_power_law(50, 2.0);
  const SpectralRfMap map = make_spectral_rf_map(spec, 4096, 15);
  const SampleSet x = sample_uniform01(20, 16);
  const Eigen::MatrixXd z = spectral_rf_features(map, spec, x.points);
  const Eigen::MatrixXd approx = z * z.transpose();
  const Eigen::MatrixXd exact = gram(spec, x);
  CHECK((approx - exact).cwiseAbs().mean() <= 0.1);
}

TEST_CASE("csv loader with and without header") {
  const std::string plain = "/tmp/kpca_test_plain.csv";
  {
    std::ofstream out(plain);
    out << "0.1,0.2\n0.3,0.4\n";
  }
  const SampleSet a = load_csv(plain);
  CHECK(a.size() == 2);
  CHECK(a.dim() == 2);
  CHECK(a.points(1, 1) == doctest::Approx(0.4));

  const std::string with_header = "/tmp/kpca_test_header.csv";
  {
    std::ofstream out(with_header);
    out << "x,y\n0.1,0.2\n0.3,0.4\n";
  }
  const SampleSet b = load_csv(with_header);
  CHECK(b.size() == 2);

  const std::string bad = "/tmp/kpca_test_bad.csv";
  {
    std::ofstream out(bad);
    out << "0.1,0.2\nfoo,bar\n";
  }
  CHECK_THROWS_WITH_AS(load_csv(bad), doctest::Contains("line 2"), std::invalid_argument);

  const std::string ragged = "/tmp/kpca_test_ragged.csv";
  {
    std::ofstream out(ragged);
    out << "0.1,0.2\n0.3\n";
  }
  CHECK_THROWS_WITH_AS(load_csv(ragged), doctest::Contains("line 2"), std::invalid_argument);
  std::remove(plain.c_str());
  std::remove(with_header.c_str());
  std::remove(bad.c_str());
  std::remove(ragged.c_str());
}

TEST_CASE("sampling is reproducible from the seed") {
  const SampleSet a = sample_uniform01(10, 99);
  const SampleSet b = sample_uniform01(10, 99);
  CHECK(a.points.isApprox(b.points, 0.0));
  CHECK(a.points.minCoeff() >= 0.0);
  CHECK(a.points.maxCoeff() <= 1.0);
}
