#pragma once

#include <vector>

#include "halfspace/grid_field.hpp"

namespace halfspace {

/// Frequency-indexed N x N matrices acting as a Fourier multiplier.
class MultiplierSymbol {
 public:
  MultiplierSymbol() = default;
  MultiplierSymbol(GridSpec grid, std::vector<Eigen::MatrixXcd> blocks)
      : grid_(grid), blocks_(std::move(blocks)) {
    require(static_cast<int>(blocks_.size()) == grid_.points(), "symbol: one block per frequency");
  }

  const GridSpec& grid() const { return grid_; }
  const Eigen::MatrixXcd& at(int p) const { return blocks_[p]; }
  const Eigen::MatrixXcd& at(const Frequency& k) const { return blocks_[index_of(k)]; }

  int index_of(const Frequency& k) const {
    auto wrap = [&](int v) { return ((v % grid_.G) + grid_.G) % grid_.G; };
    return grid_.n == 1 ? wrap(k[0]) : wrap(k[0]) + grid_.G * wrap(k[1]);
  }

  /// Applies the multiplier; the result keeps the input's representation.
  Field apply(const Field& f) const {
    require(f.grid() == grid_, "symbol: grid mismatch");
    Field fs = to_spectral(f);
    for (int p = 0; p < grid_.points(); ++p)
      fs.values().row(p) = (blocks_[p] * fs.values().row(p).transpose()).transpose();
    return f.is_physical() ? inverse_transform(fs) : fs;
  }

  MultiplierSymbol operator*(const MultiplierSymbol& o) const {
    std::vector<Eigen::MatrixXcd> out(blocks_.size());
    for (size_t p = 0; p < blocks_.size(); ++p) out[p] = blocks_[p] * o.blocks_[p];
    return {grid_, std::move(out)};
  }

 private:
  GridSpec grid_;
  std::vector<Eigen::MatrixXcd> blocks_;
};

/// Symbol of D = [[0, div], [-grad, 0]]: (Df)^(k) = (i k.f_par, -i k f_perp)
/// per system component.
inline MultiplierSymbol build_D_symbol(const GridSpec& grid) {
  const int N = grid.channels();
  std::vector<Eigen::MatrixXcd> blocks(grid.points(), Eigen::MatrixXcd::Zero(N, N));
  for (int p = 0; p < grid.points(); ++p) {
    auto k = grid.frequency(p);
    for (int j = 0; j < grid.n; ++j)
      for (int a = 0; a < grid.m; ++a) {
        blocks[p](grid.perp_channel(a), grid.tangential_channel(j, a)) = cplx(0.0, k[j]);
        blocks[p](grid.tangential_channel(j, a), grid.perp_channel(a)) = cplx(0.0, -k[j]);
      }
  }
  return {grid, std::move(blocks)};
}

/// Orthogonal projection onto the closure of the range of D:
/// diag(I_m, k k^T / |k|^2 (x) I_m) for k != 0 and 0 at k = 0.
inline MultiplierSymbol build_P_symbol(const GridSpec& grid) {
  const int N = grid.channels();
  std::vector<Eigen::MatrixXcd> blocks(grid.points(), Eigen::MatrixXcd::Zero(N, N));
  for (int p = 1; p < grid.points(); ++p) {
    auto k = grid.frequency(p);
    const double k2 = static_cast<double>(k[0]) * k[0] + static_cast<double>(k[1]) * k[1];
    for (int a = 0; a < grid.m; ++a) {
      blocks[p](a, a) = 1.0;
      for (int i = 0; i < grid.n; ++i)
        for (int j = 0; j < grid.n; ++j)
          blocks[p](grid.tangential_channel(i, a), grid.tangential_channel(j, a)) = k[i] * k[j] / k2;
    }
  }
  return {grid, std::move(blocks)};
}

/// |k|^s on every channel; zero at k = 0.
inline MultiplierSymbol build_power_symbol(const GridSpec& grid, double s) {
  const int N = grid.channels();
  std::vector<Eigen::MatrixXcd> blocks(grid.points(), Eigen::MatrixXcd::Zero(N, N));
  for (int p = 1; p < grid.points(); ++p)
    blocks[p] = std::pow(frequency_norm(grid.frequency(p)), s) * Eigen::MatrixXcd::Identity(N, N);
  return {grid, std::move(blocks)};
}

/// Inverse of D on its range (zero on the null space of D).
inline MultiplierSymbol build_D_inverse_symbol(const GridSpec& grid) {
  auto D = build_D_symbol(grid);
  std::vector<Eigen::MatrixXcd> blocks(grid.points());
  for (int p = 0; p < grid.points(); ++p) {
    const double k = frequency_norm(grid.frequency(p));
    // On the range D^2 = |k|^2, so D^{-1} = D / |k|^2 there and D kills the rest.
    blocks[p] = p == 0 ? Eigen::MatrixXcd::Zero(grid.channels(), grid.channels())
                       : Eigen::MatrixXcd(D.at(p) / (k * k));
  }
  return {grid, std::move(blocks)};
}

}  // namespace halfspace
