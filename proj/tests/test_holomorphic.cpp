#include <gtest/gtest.h>

#include <cmath>

#include "halfspace/holomorphic.hpp"

using namespace halfspace;

TEST(Functions, ValuesOnBothHalfPlanes) {
  EXPECT_EQ(chi_plus()(cplx(2, 1)), cplx(1.0));
  EXPECT_EQ(chi_plus()(cplx(-2, 1)), cplx(0.0));
  EXPECT_EQ(sgn()(cplx(-0.5, 3)), cplx(-1.0));
  EXPECT_NEAR(std::abs(exp_abs(2.0)(cplx(-1.5, 0.2)) - std::exp(-2.0 * cplx(1.5, -0.2))), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(psi_quadratic()(cplx(2, 0)) - 0.4), 0.0, 1e-15);
  const cplx z(0.7, -0.3);
  EXPECT_NEAR(std::abs(dilate(psi_quadratic(), 3.0)(z) - psi_quadratic()(3.0 * z)), 0.0, 1e-15);
}

TEST(Functions, DecayExponents) {
  EXPECT_TRUE(psi_quadratic().decays());
  EXPECT_FALSE(sgn().decays());
  EXPECT_FALSE(exp_abs(1.0).decays());
  EXPECT_TRUE(bracket_exp().decays());
}

TEST(Contour, RejectsNonDecaying) {
  EXPECT_THROW(ContourSpec::for_function(sgn(), 0.2), Error);
  auto cs = ContourSpec::for_function(psi_quadratic(), 0.2);
  EXPECT_GT(cs.nu, 0.2);
  EXPECT_LT(cs.nu, std::acos(-1.0) / 2);
  EXPECT_GT(cs.size(), 100);
}

TEST(Calderon, ThetaConstantAgainstBessel) {
  // int_0^inf theta(t)^3 dt/t = int e^{-3(t + 1/t)} dt/t = 2 K_0(6).
  auto pair = calderon_pair(theta());
  const double expect = 2.0 * std::cyl_bessel_k(0.0, 6.0);
  EXPECT_NEAR(1.0 / pair.c_plus, expect, 1e-10 * expect);
  EXPECT_NEAR(1.0 / pair.c_minus, expect, 1e-10 * expect);
}

TEST(Calderon, BracketExpConstantAgainstBessel) {
  // int_0^inf t^2 e^{-2t} e^{-t - 1/t} dt/t = 2 (1/3) K_2(2 sqrt 3).
  auto pair = calderon_pair(bracket_exp());
  const double expect = 2.0 / 3.0 * std::cyl_bessel_k(2.0, 2.0 * std::sqrt(3.0));
  EXPECT_NEAR(1.0 / pair.c_plus, expect, 1e-10 * expect);
}

TEST(Calderon, PairReproducesOnRealAxis) {
  auto psi = bracket_exp();
  auto pair = calderon_pair(psi);
  for (double lam : {-3.0, -0.2, 0.5, 7.0}) {
    auto s = detail::log_trapezoid([&](double t) { return (pair.phi(t * lam) * psi(t * lam)).real(); });
    EXPECT_NEAR(s, 1.0, 1e-9) << lam;
  }
}

TEST(Calderon, DegeneratePsi) {
  auto zero = custom("zero", 1, 1, [](cplx) { return cplx(0.0); });
  EXPECT_THROW(calderon_pair(zero), Error);
}
