#include <gtest/gtest.h>

#include "halfspace/calculus.hpp"
#include "halfspace/random.hpp"

using namespace halfspace;

namespace {

// Eigenvector of D (B = I) with eigenvalue s |k| for s = +-1, n = m = 1.
Field eigenvector(const GridSpec& g, int k, int s) {
  Eigen::VectorXcd v(2);
  v << 1.0, cplx(0, -s * (k > 0 ? 1 : -1));
  return plane_wave(g, {k, 0}, v);
}

}  // namespace

TEST(Calculus, IdentityCoefficientsDiagonalise) {
  GridSpec g(1, 16, 1);
  auto calc = Calculus::from_coefficients(CoefficientMatrix::identity(g));
  for (int k : {1, -3, 5})
    for (int s : {1, -1}) {
      Field h = eigenvector(g, k, s);
      EXPECT_LT(l2_norm(calc.system().apply_D(h) - cplx(s * std::abs(k)) * h), 1e-12);
      Field sg = calc.apply(sgn(), OperatorKind::DB, h);
      EXPECT_LT(l2_norm(sg - cplx(s) * h), 1e-12);
      const double t = 0.37;
      Field e = calc.semigroup(OperatorKind::DB, t, h);
      EXPECT_LT(l2_norm(e - cplx(std::exp(-t * std::abs(k))) * h), 1e-12);
      Field q = calc.apply(psi_quadratic(), OperatorKind::DB, h, CalculusPath::contour);
      const double lam = s * std::abs(k);
      EXPECT_LT(l2_norm(q - cplx(lam / (1 + lam * lam)) * h), 1e-9);
    }
}

TEST(Calculus, NullSpaceUsesValueAtZero) {
  GridSpec g(1, 16, 1);
  auto calc = Calculus::from_coefficients(CoefficientMatrix::identity(g));
  Field c = plane_wave(g, {0, 0}, Eigen::VectorXcd::Ones(2));
  EXPECT_LT(l2_norm(calc.semigroup(OperatorKind::DB, 1.0, c) - c), 1e-13);
  EXPECT_LT(l2_norm(calc.apply(sgn(), OperatorKind::DB, c)), 1e-13);
  EXPECT_THROW(calc.semigroup(OperatorKind::DB, -1.0, c), Error);
}

TEST(Calculus, ContourMatchesEigen) {
  for (int n : {1, 2}) {
    GridSpec g(n, n == 1 ? 32 : 8, 1);
    Rng rng(30 + n);
    Calculus calc(FirstOrderSystem::from_coefficients(random_accretive(g, rng, 0.3)));
    auto psi = rational({0.0, 1.0}, {1.0, cplx(0, 4), -6.0, cplx(0, -4), 1.0});
    for (auto T : {OperatorKind::DB, OperatorKind::BD}) {
      Field h = random_field(g, rng);
      Field a = calc.apply(psi, T, h, CalculusPath::contour);
      Field b = calc.apply(psi, T, h, CalculusPath::eigen);
      EXPECT_LT(l2_norm(a - b), 1e-8 * l2_norm(b));
    }
  }
}

TEST(Calculus, Multiplicative) {
  GridSpec g(1, 32, 1);
  Rng rng(7);
  Calculus calc(FirstOrderSystem::from_coefficients(random_accretive(g, rng, 0.4)));
  Field h = random_field(g, rng);
  auto f = psi_quadratic(), b = bracket_exp();
  Field ab = calc.apply(f, OperatorKind::DB, calc.apply(b, OperatorKind::DB, h));
  Field prod = calc.apply(product(f, b), OperatorKind::DB, h);
  EXPECT_LT(l2_norm(ab - prod), 1e-10 * l2_norm(prod));
}

TEST(Calculus, ResolventAgreesWithSolve) {
  GridSpec g(1, 16, 1);
  Rng rng(17);
  auto sys = FirstOrderSystem::from_coefficients(random_accretive(g, rng, 0.3));
  Calculus calc(sys);
  Field h = random_field(g, rng);
  const double t = 0.6;
  auto r = custom("res", 0, 1, [t](cplx z) { return 1.0 / (1.0 + cplx(0, t) * z); }, 1.0);
  Field a = calc.apply(r, OperatorKind::DB, h, CalculusPath::eigen);
  Field b = resolvent_solve(*sys, OperatorKind::DB, t, h).solution;
  EXPECT_LT(l2_norm(a - b), 1e-10 * l2_norm(b));
}

TEST(Calculus, SpectrumInsideSector) {
  GridSpec g(2, 8, 1);
  Rng rng(3);
  Calculus calc(FirstOrderSystem::from_coefficients(random_accretive(g, rng, 0.4)));
  const double omega = calc.accretivity().omega;
  const auto& lam = calc.spectrum().lambda;
  for (int i = 0; i < lam.size(); ++i) {
    const double arg = std::abs(std::arg(bracket(lam(i))));
    EXPECT_LE(arg, omega + 1e-8);
  }
}
