#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "halfspace/calculus.hpp"

namespace halfspace {

/// F(t_j, .) sampled on a ladder; |F|^2 sums over channels.
struct TentField {
  TLadder ladder;
  std::vector<Field> slices;

  TentField() = default;
  TentField(TLadder l, std::vector<Field> s) : ladder(std::move(l)), slices(std::move(s)) {
    require(static_cast<int>(slices.size()) == ladder.size(), "tent field: one slice per ladder point");
    for (size_t j = 0; j < slices.size(); ++j) {
      require(slices[j].grid() == slices[0].grid(), "tent field: slices must share a grid");
      if (j > 0) require(ladder.t(j) > ladder.t(j - 1), "tent field: ladder must increase");
    }
  }

  template <class Fn>
  static TentField sample(const TLadder& l, Fn&& fn) {
    std::vector<Field> s;
    for (int j = 0; j < l.size(); ++j) s.push_back(fn(l.t(j)));
    return {l, std::move(s)};
  }

  const GridSpec& grid() const { return slices.at(0).grid(); }
  int size() const { return ladder.size(); }

  /// Per-point |F(t_j, y)|^2.
  Eigen::VectorXd intensity(int j) const {
    return to_physical(slices[j]).values().rowwise().squaredNorm();
  }

  TentField scaled(cplx c) const {
    TentField out = *this;
    for (auto& s : out.slices) s *= c;
    return out;
  }
};

struct WhitneyParams {
  double c0 = 2.0;
  double c1 = 1.0;
  double aperture = 1.0;

  void validate() const {
    require(c0 > 1.0 && c1 > 0.0 && aperture > 0.0, "whitney: need c0 > 1, c1 > 0, a > 0");
  }
};

namespace detail {

inline double unit_ball_volume(int n) { return n == 1 ? 2.0 : std::numbers::pi; }

// Grid offsets within torus distance < radius; the centre is always in.
inline std::vector<std::array<int, 2>> ball_offsets(const GridSpec& grid, double radius) {
  std::vector<std::array<int, 2>> out;
  const int G = grid.G, h = G / 2;
  const int span1 = grid.n == 2 ? G : 1;
  for (int j = 0; j < span1; ++j)
    for (int i = 0; i < G; ++i) {
      const int di = i < h ? i : i - G, dj = j < h ? j : j - G;
      const double d = grid.spacing() * std::hypot(static_cast<double>(di), static_cast<double>(dj));
      if (d < radius || (i == 0 && j == 0)) out.push_back({i, j});
    }
  return out;
}

inline int shift(const GridSpec& grid, int p, const std::array<int, 2>& off) {
  const int G = grid.G;
  if (grid.n == 1) return (p + off[0]) % G;
  return ((p % G) + off[0]) % G + G * (((p / G) + off[1]) % G);
}

// Ball average of per-point values v over B(x, radius) for every x.
inline Eigen::VectorXd ball_average(const GridSpec& grid, const Eigen::VectorXd& v, double radius) {
  const auto offs = ball_offsets(grid, radius);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(grid.points());
  for (int p = 0; p < grid.points(); ++p) {
    double s = 0.0;
    for (const auto& o : offs) s += v(shift(grid, p, o));
    out(p) = s / static_cast<double>(offs.size());
  }
  return out;
}

}  // namespace detail

/// Cone normalisation |B(x, a t)| / t^n, clipped at the torus volume.
inline double cone_weight(const GridSpec& grid, double a, double t) {
  return std::min(detail::unit_ball_volume(grid.n) * std::pow(a, grid.n),
                  grid.torus_volume() / std::pow(t, grid.n));
}

/// (SF)(x)^2 = sum_j w_j |B(x, a t_j)| t_j^{-n} avg_{B(x, a t_j)} |F_j|^2.
/// The ladder range bounds the t integral; values outside count as zero.
inline Eigen::VectorXd square_function(const TentField& F, const WhitneyParams& wp = {}) {
  wp.validate();
  const auto& grid = F.grid();
  Eigen::VectorXd sf2 = Eigen::VectorXd::Zero(grid.points());
  for (int j = 0; j < F.size(); ++j) {
    const double t = F.ladder.t(j);
    sf2 += F.ladder.weight(j) * cone_weight(grid, wp.aperture, t) *
           detail::ball_average(grid, F.intensity(j), wp.aperture * t);
  }
  return sf2.cwiseSqrt();
}

/// l^p norm of point values with the cell-volume measure.
inline double lp_norm(const GridSpec& grid, const Eigen::VectorXd& v, double p) {
  require(p > 0.0, "lp_norm: p must be positive");
  if (std::isinf(p)) return v.cwiseAbs().maxCoeff();
  return std::pow(v.cwiseAbs().array().pow(p).sum() * grid.cell_volume(), 1.0 / p);
}

inline double tent_norm(const TentField& F, double p, const WhitneyParams& wp = {}) {
  return lp_norm(F.grid(), square_function(F, wp), p);
}

/// sum_j w_j sum_y |F_j(y)|^2 h^n, the space-time integral against dt dy / t.
inline double spacetime_l2_squared(const TentField& F) {
  double s = 0.0;
  for (int j = 0; j < F.size(); ++j) s += F.ladder.weight(j) * F.intensity(j).sum() * F.grid().cell_volume();
  return s;
}

/// sum_j w_j <F_j, G_j>, the pairing against dt dy / t.
inline cplx spacetime_pairing(const TentField& F, const TentField& G) {
  require(F.size() == G.size(), "pairing: ladders differ");
  cplx s = 0.0;
  for (int j = 0; j < F.size(); ++j) s += F.ladder.weight(j) * inner(F.slices[j], G.slices[j]);
  return s;
}

/// Constant C in |pairing(F, G)| <= C ||SF||_p ||SG||_p': the reciprocal of
/// the smallest cone weight on the ladder.
inline double duality_constant(const TentField& F, const WhitneyParams& wp = {}) {
  return 1.0 / cone_weight(F.grid(), wp.aperture, F.ladder.t(F.size() - 1));
}

/// sup over centres and dyadic radii r = 2 pi 2^{-k} >= t_1 of
/// (|B|^{-1-2 alpha/n} sum_{t_j < r} w_j sum_{y in B(x,r)} |F_j|^2 h^n)^{1/2},
/// |B| the discrete ball measure.
inline double carleson_norm(const TentField& F, double alpha) {
  require(alpha >= 0.0, "carleson_norm: alpha must be nonnegative");
  const auto& grid = F.grid();
  std::vector<Eigen::VectorXd> inten;
  for (int j = 0; j < F.size(); ++j) inten.push_back(F.intensity(j));
  double best = 0.0;
  for (double r = 2.0 * std::numbers::pi; r >= F.ladder.t(0); r *= 0.5) {
    Eigen::VectorXd slab = Eigen::VectorXd::Zero(grid.points());
    for (int j = 0; j < F.size() && F.ladder.t(j) < r; ++j) slab += F.ladder.weight(j) * inten[j];
    const auto offs = detail::ball_offsets(grid, r);
    const double vol = static_cast<double>(offs.size()) * grid.cell_volume();
    const double norm = std::pow(vol, -1.0 - 2.0 * alpha / grid.n);
    Eigen::VectorXd mass = detail::ball_average(grid, slab, r) * vol;
    best = std::max(best, norm * mass.maxCoeff());
  }
  return std::sqrt(best);
}

/// N*(x) = sup_j (RMS of |F| over (t_j/c0, c0 t_j) x B(x, c1 t_j))
/// with the dt measure on the ladder.
inline Eigen::VectorXd nt_maximal(const TentField& F, const WhitneyParams& wp = {}) {
  wp.validate();
  const auto& grid = F.grid();
  std::vector<Eigen::VectorXd> inten;
  for (int j = 0; j < F.size(); ++j) inten.push_back(F.intensity(j));
  Eigen::VectorXd out = Eigen::VectorXd::Zero(grid.points());
  for (int j = 0; j < F.size(); ++j) {
    const double t = F.ladder.t(j);
    const double radius = wp.c1 * t;
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(grid.points());
    double mass = 0.0;
    for (int i = 0; i < F.size(); ++i) {
      const double s = F.ladder.t(i);
      if (s < t / wp.c0 * (1 - 1e-12) || s > t * wp.c0 * (1 + 1e-12)) continue;
      const double w = F.ladder.weight(i) * s;
      acc += w * detail::ball_average(grid, inten[i], radius);
      mass += w;
    }
    out = out.cwiseMax((acc / mass).cwiseSqrt());
  }
  return out;
}

/// (psi(t_j T) h)_j on the ladder.
inline TentField quadrature_Q(const Calculus& calc, OperatorKind T, const HolomorphicFunction& psi, const Field& h,
                              const TLadder& ladder) {
  auto e = calc.expand(T, h);
  return TentField::sample(ladder, [&](double t) { return e.eval(dilate(psi, t)); });
}

/// sum_j w_j phi(t_j T) F_j
inline Field quadrature_T(const Calculus& calc, OperatorKind T, const HolomorphicFunction& phi, const TentField& F) {
  Field out(F.grid());
  for (int j = 0; j < F.size(); ++j)
    out += F.ladder.weight(j) * calc.expand(T, F.slices[j]).eval(dilate(phi, F.ladder.t(j)));
  return out;
}

/// N*(t^{-alpha} (e^{-t|BD|} h - h)).
inline Eigen::VectorXd nt_sharp(const Calculus& calc, const Field& h, const TLadder& ladder,
                                const WhitneyParams& wp = {}, double alpha = 0.0) {
  auto e = calc.expand(OperatorKind::BD, h);
  auto F = TentField::sample(ladder, [&](double t) {
    return e.eval([t](cplx z) { return std::exp(-t * bracket(z)) - 1.0; }, 0.0) * cplx(std::pow(t, -alpha));
  });
  return nt_maximal(F, wp);
}

struct QuadraticReport {
  double value = 0.0;
  double boundary_share = 0.0;   // endpoint terms over the total
  double tail_estimate = 0.0;    // extrapolated mass outside the ladder
  std::string warning;
};

/// sum_j w_j ||psi(t_j T) h||^2
inline QuadraticReport quadratic_norm(const Calculus& calc, OperatorKind T, const HolomorphicFunction& psi,
                                      const Field& h, const TLadder& ladder) {
  require(psi.decays(), "quadratic_norm: psi must decay at 0 and infinity");
  auto e = calc.expand(T, h);
  QuadraticReport rep;
  std::vector<double> q(ladder.size());
  for (int j = 0; j < ladder.size(); ++j) {
    const double v = l2_norm(e.eval(dilate(psi, ladder.t(j))));
    q[j] = v * v;
    rep.value += ladder.weight(j) * q[j];
  }
  const int K = ladder.size();
  if (rep.value > 0) {
    rep.boundary_share = (ladder.weight(0) * q[0] + ladder.weight(K - 1) * q[K - 1]) / rep.value;
    rep.tail_estimate = q[0] / (2 * psi.sigma) + q[K - 1] / (2 * psi.tau);
    if (rep.boundary_share > 0.01)
      rep.warning = "ladder too narrow: boundary terms are " + std::to_string(100 * rep.boundary_share) +
                    "% of the total, tail estimate " + std::to_string(rep.tail_estimate);
  }
  return rep;
}

}  // namespace halfspace
