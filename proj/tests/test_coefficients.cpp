#include <gtest/gtest.h>

#include <numbers>

#include "halfspace/first_order.hpp"
#include "halfspace/random.hpp"

using namespace halfspace;

TEST(Coefficients, RejectsBadInput) {
  GridSpec g(1, 8, 1);
  EXPECT_THROW(CoefficientMatrix(g, PointwiseMatrices(7, Eigen::MatrixXcd::Identity(2, 2))), Error);
  EXPECT_THROW(CoefficientMatrix(g, PointwiseMatrices(8, Eigen::MatrixXcd::Identity(3, 3))), Error);
  PointwiseMatrices v(8, Eigen::MatrixXcd::Identity(2, 2));
  v[3](0, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(CoefficientMatrix(g, v), Error);
}

TEST(Hat, SingularABlockIsReported) {
  GridSpec g(1, 8, 1);
  PointwiseMatrices v(8, Eigen::MatrixXcd::Identity(2, 2));
  v[5](0, 0) = 0.0;
  try {
    hat_transform(CoefficientMatrix(g, v));
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("grid point 5"), std::string::npos);
  }
}

TEST(Hat, ExplicitTwoByTwo) {
  // A = [[a, b], [c, d]] -> [[1/a, -b/a], [c/a, d - cb/a]].
  GridSpec g(1, 8, 1);
  Eigen::MatrixXcd A(2, 2);
  A << 2.0, 0.5, cplx(0, 1), 3.0;
  auto B = hat_transform(CoefficientMatrix::constant(g, A));
  Eigen::MatrixXcd expect(2, 2);
  expect << 0.5, -0.25, cplx(0, 0.5), 3.0 - cplx(0, 0.25);
  EXPECT_LT((B.at(0) - expect).norm(), 1e-14);
}

TEST(Hat, Involution) {
  GridSpec g(2, 8, 2);
  Rng rng(4);
  auto A = random_accretive(g, rng, 0.4);
  auto back = coefficients_from(hat_transform(A));
  EXPECT_LT(back.distance(A), 1e-12);
  auto Bd = random_block_diagonal(g, rng, 0.5);
  auto twice = coefficients_from(hat_transform(Bd));
  EXPECT_LT(twice.distance(Bd), 1e-13);
}

TEST(Accretivity, Identity) {
  GridSpec g(1, 16, 1);
  auto rep = accretivity_estimate(hat_transform(CoefficientMatrix::identity(g)), build_D_symbol(g));
  EXPECT_NEAR(rep.kappa, 1.0, 1e-12);
  EXPECT_NEAR(rep.omega, 0.0, 1e-9);
  EXPECT_TRUE(rep.pointwise_accretive);
}

TEST(Accretivity, RotatedIdentity) {
  // B = e^{i theta} I: numerical range is the single point e^{i theta}.
  GridSpec g(1, 16, 1);
  const double th = 0.4;
  PointwiseMatrices v(g.points(), std::polar(1.0, th) * Eigen::MatrixXcd::Identity(2, 2));
  TransformedB B(g, v, 1.0);
  auto rep = accretivity_estimate(B, build_D_symbol(g));
  EXPECT_NEAR(rep.kappa, std::cos(th), 1e-12);
  EXPECT_NEAR(rep.omega, th, 1e-9);
}

TEST(Accretivity, NotAccretiveThrows) {
  GridSpec g(1, 8, 1);
  PointwiseMatrices v(g.points(), -Eigen::MatrixXcd::Identity(2, 2));
  EXPECT_THROW(accretivity_estimate(TransformedB(g, v, 1.0), build_D_symbol(g)), Error);
}

TEST(Accretivity, HermitianPerturbation) {
  GridSpec g(1, 16, 1);
  Rng rng(9);
  auto A = random_accretive(g, rng, 0.1, 2, true);
  auto rep = accretivity_estimate(hat_transform(A), build_D_symbol(g));
  EXPECT_GE(rep.kappa, 0.5);
}

TEST(Accretivity, SectorHoldsOnRandomRangeVectors) {
  for (int n : {1, 2}) {
    GridSpec g(n, n == 1 ? 32 : 8, 1);
    Rng rng(21 + n);
    auto sys = FirstOrderSystem::from_coefficients(random_accretive(g, rng, 0.5));
    const auto& rep = sys->certify();
    for (int i = 0; i < 1000; ++i) {
      Field u = random_range_field(g, rng);
      const cplx q = inner(u, sys->apply_B(u));
      const double nu2 = std::pow(l2_norm(u), 2);
      EXPECT_GE(q.real(), rep.kappa * nu2 * (1 - 1e-9));
      EXPECT_LE(std::abs(std::arg(q)), rep.omega + 1e-9);
    }
  }
}

TEST(Accretivity, SectorAngleIsTight) {
  // The numerical range of diag(e^{i a}, e^{-i b}) spans the chord between
  // the two points, so the sector half-angle is max(a, b).
  Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(2, 2);
  M(0, 0) = std::polar(1.0, 0.3);
  M(1, 1) = std::polar(2.0, -0.7);
  EXPECT_NEAR(detail::sector_angle(M), 0.7, 1e-10);
}

TEST(Accretivity, PointwiseCertificateBoundsCompression) {
  GridSpec g(1, 16, 1);
  Rng rng(5);
  auto B = hat_transform(random_accretive(g, rng, 0.3));
  auto dense = accretivity_estimate(B, build_D_symbol(g));
  auto pw = pointwise_accretivity(B);
  EXPECT_LE(pw.kappa, dense.kappa + 1e-12);
  EXPECT_GE(pw.omega, dense.omega - 1e-9);
}
