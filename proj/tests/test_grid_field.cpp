#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "halfspace/grid_field.hpp"

using namespace halfspace;

namespace {

Field noise(const GridSpec& g, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Field f(g);
  for (int c = 0; c < g.channels(); ++c)
    for (int p = 0; p < g.points(); ++p) f(p, c) = {nd(rng), nd(rng)};
  return f;
}

}  // namespace

TEST(GridSpec, RejectsBadShapes) {
  EXPECT_THROW(GridSpec(3, 16, 1), Error);
  EXPECT_THROW(GridSpec(1, 12, 1), Error);
  EXPECT_THROW(GridSpec(1, 4, 1), Error);
  EXPECT_THROW(GridSpec(2, 16, 0), Error);
  EXPECT_NO_THROW(GridSpec(2, 8, 2));
}

TEST(GridSpec, ChannelLayout) {
  GridSpec g(2, 8, 3);
  EXPECT_EQ(g.channels(), 9);
  EXPECT_EQ(g.perp_channel(2), 2);
  EXPECT_EQ(g.tangential_channel(0, 0), 3);
  EXPECT_EQ(g.tangential_channel(1, 2), 8);
  EXPECT_EQ(g.points(), 64);
  EXPECT_EQ(g.dofs(), 576);
}

TEST(GridSpec, TorusDistanceWraps) {
  GridSpec g(1, 16, 1);
  EXPECT_NEAR(g.distance(0, 15), g.spacing(), 1e-15);
  EXPECT_NEAR(g.distance(0, 8), std::numbers::pi, 1e-15);
}

TEST(Transform, RoundTripAndParseval) {
  for (int n : {1, 2}) {
    GridSpec g(n, 16, 2);
    Field f = noise(g, 11);
    Field back = to_physical(to_spectral(f));
    EXPECT_LT((back.values() - f.values()).norm(), 1e-12 * f.values().norm());
    EXPECT_NEAR(l2_norm(to_spectral(f)), l2_norm(f), 1e-12 * l2_norm(f));
  }
}

TEST(Transform, PlaneWaveLandsOnOneMode) {
  GridSpec g(2, 16, 1);
  Eigen::VectorXcd amp = Eigen::VectorXcd::Ones(3);
  Field s = to_spectral(plane_wave(g, {3, -2}, amp));
  int hits = 0;
  for (int p = 0; p < g.points(); ++p)
    if (s.values().row(p).norm() > 1e-10) {
      ++hits;
      EXPECT_EQ(g.frequency(p)[0], 3);
      EXPECT_EQ(g.frequency(p)[1], -2);
    }
  EXPECT_EQ(hits, 1);
}

TEST(Norms, PlaneWaveNorms) {
  // |e^{ikx} a|_2 = |a| (2 pi)^{n/2}; homogeneous H^s multiplies by |k|^s.
  GridSpec g(1, 32, 1);
  Eigen::VectorXcd a(2);
  a << 1.0, cplx(0.0, 2.0);
  Field f = plane_wave(g, {5, 0}, a);
  const double base = a.norm() * std::sqrt(2 * std::numbers::pi);
  EXPECT_NEAR(l2_norm(f), base, 1e-12);
  EXPECT_NEAR(sobolev_norm(f, 0.5), base * std::sqrt(5.0), 1e-11);
  EXPECT_NEAR(sobolev_norm(f, -1.0), base / 5.0, 1e-12);
}

TEST(Norms, HomogeneousNormRejectsMean) {
  GridSpec g(1, 16, 1);
  Field f = plane_wave(g, {0, 0}, Eigen::VectorXcd::Ones(2));
  EXPECT_THROW(sobolev_norm(f, 1.0), Error);
  EXPECT_LT(l2_norm(remove_mean(f)), 1e-14);
}

TEST(Norms, InnerIsConjugateLinearInFirst) {
  GridSpec g(1, 16, 1);
  Field f = noise(g, 1), h = noise(g, 2);
  const cplx c(0.3, -1.2);
  Field cf = f;
  cf *= c;
  EXPECT_NEAR(std::abs(inner(cf, h) - std::conj(c) * inner(f, h)), 0.0, 1e-10);
  EXPECT_NEAR(std::abs(inner(to_spectral(f), h) - inner(f, h)), 0.0, 1e-10);
}

TEST(TLadder, WeightsIntegrateDtOverT) {
  auto l = TLadder::log_spaced(1e-3, 10.0, 8);
  EXPECT_NEAR(l.weight_sum(), std::log(1e4), 1e-12);
  EXPECT_DOUBLE_EQ(l.t(0), 1e-3);
  EXPECT_DOUBLE_EQ(l.t(l.size() - 1), 10.0);
  // int_0^inf t e^{-t} dt/t = 1 on a wide ladder.
  auto w = TLadder::log_spaced(1e-8, 60.0, 8);
  double s = 0.0;
  for (int j = 0; j < w.size(); ++j) s += w.weight(j) * w.t(j) * std::exp(-w.t(j));
  EXPECT_NEAR(s, 1.0, 1e-6);
  EXPECT_THROW(TLadder::log_spaced(1.0, 0.5, 4), Error);
}
