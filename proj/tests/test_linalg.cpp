#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "kpca/linalg.hpp"

using namespace kpca;

namespace {

Eigen::MatrixXd random_matrix(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
  return m;
}

}  // namespace

TEST_CASE("centering matrix closed form") {
  const Eigen::MatrixXd c2 = centering_matrix<double>(2);
  CHECK(c2(0, 0) == doctest::Approx(0.5));
  CHECK(c2(0, 1) == doctest::Approx(-0.5));
  CHECK(c2(1, 0) == doctest::Approx(-0.5));
  CHECK(c2(1, 1) == doctest::Approx(0.5));

  const Eigen::MatrixXd c1 = centering_matrix<double>(1);
  CHECK(c1(0, 0) == doctest::Approx(0.0));

  CHECK_THROWS_AS(centering_matrix<double>(0), std::invalid_argument);
}

TEST_CASE("centering annihilates constants and is idempotent") {
  for (Index n : {Index(2), Index(7), Index(31), Index(50)}) {
    const Eigen::MatrixXd c = centering_matrix<double>(n);
    CHECK((c * Eigen::VectorXd::Ones(n)).cwiseAbs().maxCoeff() <= 1e-13);
    CHECK((c * c - c).cwiseAbs().maxCoeff() <= 1e-12);
    // nullity exactly one
    const SymEigen<double> eig = sym_eig(c);
    Index small = 0;
    for (Index i = 0; i < n; ++i)
      if (eig.eigenvalues(i) < 0.5) ++small;
    CHECK(small == 1);
  }
}

TEST_CASE("center_cols and center_sym match explicit products") {
  const Eigen::MatrixXd a = random_matrix(9, 5, 1);
  const Eigen::MatrixXd c9 = centering_matrix<double>(9);
  CHECK((center_cols(a) - c9 * a).cwiseAbs().maxCoeff() <= 1e-13);

  const Eigen::MatrixXd s = random_matrix(8, 8, 2);
  const Eigen::MatrixXd c8 = centering_matrix<double>(8);
  CHECK((center_sym(s) - c8 * s * c8).cwiseAbs().maxCoeff() <= 1e-13);
}

TEST_CASE("sym_eig on simple fixtures") {
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(3, 3);
  const SymEigen<double> e1 = sym_eig(id);
  for (Index i = 0; i < 3; ++i) CHECK(e1.eigenvalues(i) == doctest::Approx(1.0));

  Eigen::MatrixXd d = Eigen::Vector3d(3.0, 1.0, 2.0).asDiagonal();
  const SymEigen<double> e2 = sym_eig(d);
  CHECK(e2.eigenvalues(0) == doctest::Approx(3.0));
  CHECK(e2.eigenvalues(1) == doctest::Approx(2.0));
  CHECK(e2.eigenvalues(2) == doctest::Approx(1.0));
}

TEST_CASE("sym_eig reconstruction and orthonormality on random input") {
  Eigen::MatrixXd a = random_matrix(20, 20, 3);
  a = ((a + a.transpose()) / 2.0).eval();
  const SymEigen<double> eig = sym_eig(a);
  const Eigen::MatrixXd rec =
      eig.eigenvectors * eig.eigenvalues.asDiagonal() * eig.eigenvectors.transpose();
  CHECK((rec - a).norm() <= 1e-10 * a.norm());
  CHECK((eig.eigenvectors.transpose() * eig.eigenvectors - Eigen::MatrixXd::Identity(20, 20))
            .cwiseAbs()
            .maxCoeff() <= 1e-10);
}

TEST_CASE("sym_eig input validation") {
  CHECK_THROWS_AS(sym_eig(random_matrix(3, 4, 4)), std::invalid_argument);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(2, 2);
  bad(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(sym_eig(bad), std::invalid_argument);
}

TEST_CASE("pinv_psd on diagonal and degenerate input") {
  Eigen::MatrixXd d = Eigen::Vector2d(2.0, 0.0).asDiagonal();
  const Eigen::MatrixXd p = pinv_psd(d, 1e-10);
  CHECK(p(0, 0) == doctest::Approx(0.5));
  CHECK(p(1, 1) == doctest::Approx(0.0));

  const Eigen::MatrixXd z = Eigen::MatrixXd::Zero(4, 4);
  CHECK(pinv_psd(z).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("pinv_psd satisfies the Penrose identities on a rank-3 PSD matrix") {
  const Eigen::MatrixXd b = random_matrix(6, 3, 5);
  const Eigen::MatrixXd a = b * b.transpose();
  const Eigen::MatrixXd ap = pinv_psd(a);
  CHECK((a * ap * a - a).norm() <= 1e-8 * a.norm());
  CHECK((ap * a * ap - ap).norm() <= 1e-8 * ap.norm());
}

TEST_CASE("pinv_psd rejects significantly indefinite input") {
  Eigen::MatrixXd neg = Eigen::Vector2d(1.0, -0.5).asDiagonal();
  CHECK_THROWS_AS(pinv_psd(neg), std::runtime_error);
  CHECK_THROWS_AS(pinv_psd(random_matrix(3, 3, 6), 2.0), std::invalid_argument);
}

TEST_CASE("inv_sqrt_psd on diagonal fixtures") {
  Eigen::MatrixXd d1 = Eigen::Vector2d(4.0, 1.0).asDiagonal();
  const Eigen::MatrixXd r1 = inv_sqrt_psd(d1);
  CHECK(r1(0, 0) == doctest::Approx(0.5));
  CHECK(r1(1, 1) == doctest::Approx(1.0));

  Eigen::MatrixXd d2 = Eigen::Vector2d(4.0, 0.0).asDiagonal();
  const Eigen::MatrixXd r2 = inv_sqrt_psd(d2, 1e-10);
  CHECK(r2(0, 0) == doctest::Approx(0.5));
  CHECK(r2(1, 1) == doctest::Approx(0.0));
}

TEST_CASE("inv_sqrt_psd squares to the pseudo-inverse and projects onto the range") {
  const Eigen::MatrixXd b = random_matrix(8, 5, 7);
  const Eigen::MatrixXd a = b * b.transpose();
  const Eigen::MatrixXd r = inv_sqrt_psd(a);
  CHECK((r * r - pinv_psd(a)).norm() <= 1e-8 * pinv_psd(a).norm());
  const Eigen::MatrixXd proj = r * a * r;
  CHECK((proj * proj - proj).norm() <= 1e-8);
  // retained range has dimension 5
  CHECK(proj.trace() == doctest::Approx(5.0).epsilon(1e-8));
}

TEST_CASE("psd_rank thresholds correctly") {
  Eigen::MatrixXd d = Eigen::Vector3d(1.0, 1e-4, 1e-14).asDiagonal();
  CHECK(psd_rank(d, 1e-10) == 2);
  CHECK(psd_rank(d, 1e-2) == 1);
}

TEST_CASE("operator_norm matches the largest singular value") {
  const Eigen::MatrixXd m = random_matrix(7, 4, 8);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  CHECK(operator_norm(m) == doctest::Approx(svd.singularValues()(0)));
}
