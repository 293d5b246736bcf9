#include <gtest/gtest.h>

#include "halfspace/random.hpp"

using namespace halfspace;

namespace {

BoundaryData cos_mode(const GridSpec& g, int k) {
  BoundaryData f(g.points(), g.m);
  for (int p = 0; p < g.points(); ++p) f(p, 0) = std::cos(k * g.coordinates(p)[0]);
  return f;
}

}  // namespace

TEST(Laplace, DirichletModesByHand) {
  // (d_t^2 - k^2) u = 0 with decay: u = e^{-|k| t} cos kx.
  GridSpec g(1, 32, 1);
  BoundaryProblems bp(CoefficientMatrix::identity(g));
  for (int k = 1; k <= 3; ++k) {
    BoundaryData f = cos_mode(g, k);
    auto sol = bp.solve_dirichlet(f);
    for (double t : {0.0, 0.25, 1.0}) {
      BoundaryData ex = std::exp(-k * t) * f;
      EXPECT_LT(boundary_norm(g, sol.potential(t) - ex), 1e-10 * boundary_norm(g, ex));
    }
    EXPECT_LT(boundary_norm(g, bp.dirichlet_to_neumann(f) + double(k) * f), 1e-10 * k);
  }
}

TEST(Laplace, TwoDimensionalMode) {
  GridSpec g(2, 8, 1);
  BoundaryProblems bp(CoefficientMatrix::identity(g));
  BoundaryData f(g.points(), 1);
  for (int p = 0; p < g.points(); ++p) {
    auto x = g.coordinates(p);
    f(p, 0) = std::cos(x[0] + 2 * x[1]);
  }
  const double kn = std::sqrt(5.0);
  auto sol = bp.solve_dirichlet(f);
  EXPECT_LT(boundary_norm(g, sol.potential(0.4) - std::exp(-0.4 * kn) * f), 1e-10);
}

TEST(Laplace, SingleLayerKernel) {
  // S_t cos kx = -e^{-k|t|} cos kx / (2k) for the Laplacian.
  GridSpec g(1, 32, 1);
  auto calc = Calculus::from_coefficients(CoefficientMatrix::identity(g));
  for (int k = 1; k <= 3; ++k)
    for (double t : {0.5, -0.5}) {
      BoundaryData f = cos_mode(g, k);
      BoundaryData S = single_layer(calc, t, f);
      EXPECT_LT(boundary_norm(g, S + std::exp(-k * std::abs(t)) / (2.0 * k) * f), 1e-12);
    }
}

TEST(Layers, JumpsForRandomCoefficients) {
  GridSpec g(1, 32, 1);
  Rng rng(9);
  for (int i = 0; i < 3; ++i) {
    Calculus calc(FirstOrderSystem::from_coefficients(random_accretive(g, rng, 0.4)));
    auto j = layer_jumps(calc, random_scalar(g, rng));
    EXPECT_LT(j.single, 1e-10);
    EXPECT_LT(j.dbl, 1e-10);
  }
}

TEST(Layers, DualityWithAdjoint) {
  GridSpec g(2, 8, 1);
  Rng rng(10);
  auto A = random_accretive(g, rng, 0.3);
  Calculus calc(FirstOrderSystem::from_coefficients(A));
  Calculus adj(FirstOrderSystem::from_coefficients(A.adjoint()));
  BoundaryData f = random_scalar(g, rng), h = random_scalar(g, rng);
  for (double t : {0.1, -0.3, 1.0}) {
    auto r = layer_duality_check(calc, adj, t, f, h);
    EXPECT_LT(r.single, 1e-10);
    EXPECT_LT(r.dbl, 1e-10);
  }
}

TEST(BVP, SolversAgree) {
  GridSpec g(1, 32, 1);
  Rng rng(11);
  BoundaryProblems bp(random_accretive(g, rng, 0.3));
  BoundaryData f = random_scalar(g, rng);
  auto d = bp.solve_dirichlet(f);
  EXPECT_LT(boundary_norm(g, d.dirichlet_trace() - f), 1e-10 * boundary_norm(g, f));
  // Neumann with the Dirichlet solution's conormal derivative gives the same gradient.
  auto nsol = bp.solve_neumann(d.neumann_trace());
  EXPECT_LT(l2_norm(nsol.conormal_gradient(0.2) - d.conormal_gradient(0.2)), 1e-9 * l2_norm(d.h));
  // Regularity data is the tangential gradient of f.
  auto r = bp.solve_regularity(gradient(g, f));
  EXPECT_LT(l2_norm(r.h - d.h), 1e-9 * l2_norm(d.h));
  EXPECT_LT(boundary_layer_representation_check(bp.calculus(), d, {0.05, 0.5}), 1e-9);
  EXPECT_LT(equation_residual(bp.calculus(), d, TLadder::log_spaced(1.0 / 64, 4.0, 8)), 1e-3);
}

TEST(BVP, HardyDimensionsSplitTheRange) {
  GridSpec g(1, 16, 1);
  Rng rng(13);
  BoundaryProblems bp(random_accretive(g, rng, 0.3));
  const auto& H = bp.hardy();
  EXPECT_EQ(H.d_plus() + H.d_minus(), g.dofs() - g.channels());
  EXPECT_EQ(H.d_plus(), H.d_minus());
}

TEST(Kato, BlockDiagonalSquareRoot) {
  for (int n : {1, 2}) {
    GridSpec g(n, n == 1 ? 32 : 8, 1);
    Rng rng(14 + n);
    auto A = random_block_diagonal(g, rng, 0.5);
    Calculus calc(FirstOrderSystem::from_coefficients(A));
    auto k = kato_check(calc, A, random_scalar(g, rng));
    EXPECT_LT(k.relative_error(), 1e-10);
  }
}
