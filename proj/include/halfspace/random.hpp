#pragma once

#include <cstdint>
#include <random>

#include "halfspace/bvp.hpp"

namespace halfspace {

using Rng = std::mt19937_64;

inline cplx complex_normal(Rng& rng) {
  std::normal_distribution<double> nd;
  return {nd(rng), nd(rng)};
}

/// Gaussian field; with band > 0 only frequencies |k_j| <= band are excited,
/// so the same seed gives the same function on every grid.
inline Field random_field(const GridSpec& grid, Rng& rng, int band = 0) {
  if (band <= 0) {
    Field f(grid);
    for (int c = 0; c < grid.channels(); ++c)
      for (int p = 0; p < grid.points(); ++p) f(p, c) = complex_normal(rng);
    return f;
  }
  require(band < grid.G / 2, "random_field: band exceeds the grid resolution");
  Field f(grid);
  const int k1max = grid.n == 2 ? band : 0;
  for (int k1 = -k1max; k1 <= k1max; ++k1)
    for (int k0 = -band; k0 <= band; ++k0) {
      Eigen::VectorXcd amp(grid.channels());
      for (int c = 0; c < grid.channels(); ++c) amp(c) = complex_normal(rng);
      f += plane_wave(grid, {k0, k1}, amp);
    }
  return f;
}

/// Random element of the range of D (and of DB): P applied to a random field.
inline Field random_range_field(const GridSpec& grid, Rng& rng, int band = 0) {
  return to_physical(build_P_symbol(grid).apply(random_field(grid, rng, band)));
}

/// Mean-zero random scalar boundary data (points x m).
inline BoundaryData random_scalar(const GridSpec& grid, Rng& rng, int band = 0) {
  Field f = random_field(grid, rng, band);
  return remove_mean(BoundaryData(f.values().leftCols(grid.m)));
}

/// Smooth matrix field sum_{|k| <= band} C_k e^{ikx} scaled to sup norm
/// `size`; Hermitian pointwise when `hermitian` is set.
inline CoefficientMatrix smooth_perturbation(const GridSpec& grid, Rng& rng, double size, int band = 2,
                                             bool hermitian = false) {
  const int N = grid.channels();
  PointwiseMatrices E(grid.points(), Eigen::MatrixXcd::Zero(N, N));
  const int k1max = grid.n == 2 ? band : 0;
  for (int k1 = -k1max; k1 <= k1max; ++k1)
    for (int k0 = -band; k0 <= band; ++k0) {
      Eigen::MatrixXcd C(N, N);
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) C(i, j) = complex_normal(rng);
      for (int p = 0; p < grid.points(); ++p) {
        auto x = grid.coordinates(p);
        E[p] += std::exp(cplx(0.0, k0 * x[0] + k1 * x[1])) * C;
      }
    }
  if (hermitian)
    for (auto& e : E) e = 0.5 * (e + e.adjoint()).eval();
  const double s = CoefficientMatrix(grid, E).sup_norm();
  for (auto& e : E) e *= size / s;
  return {grid, std::move(E)};
}

/// I + E with |E|_inf = size.
inline CoefficientMatrix random_accretive(const GridSpec& grid, Rng& rng, double size, int band = 2,
                                          bool hermitian = false) {
  auto E = smooth_perturbation(grid, rng, size, band, hermitian);
  PointwiseMatrices v = E.values();
  for (auto& e : v) e += Eigen::MatrixXcd::Identity(grid.channels(), grid.channels());
  return {grid, std::move(v)};
}

/// diag(I_m, d) with d = I + E, E real symmetric pointwise and |E|_inf = size.
inline CoefficientMatrix random_block_diagonal(const GridSpec& grid, Rng& rng, double size, int band = 2) {
  require(size >= 0.0 && size < 1.0, "random_block_diagonal: size must lie in [0, 1)");
  const int r = grid.channels() - grid.m;
  auto E = smooth_perturbation(GridSpec(grid.n, grid.G, grid.m), rng, 1.0, band);
  PointwiseMatrices a(grid.points(), Eigen::MatrixXcd::Identity(grid.m, grid.m)), d;
  double s = 0.0;
  for (const auto& e : E.values()) {
    Eigen::MatrixXd blk = e.bottomRightCorner(r, r).real();
    blk = 0.5 * (blk + blk.transpose()).eval();
    s = std::max(s, blk.cwiseAbs().rowwise().sum().maxCoeff());
    d.push_back(blk.cast<cplx>());
  }
  for (auto& x : d) x = Eigen::MatrixXcd::Identity(r, r) + (s > 0 ? size / s : 0.0) * x;
  return CoefficientMatrix::block_diagonal(grid, a, d);
}

}  // namespace halfspace
