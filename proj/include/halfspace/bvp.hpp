#pragma once

#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "halfspace/tent.hpp"

namespace halfspace {

/// Boundary functions: points x components. Scalar data has m columns,
/// tangential (gradient) data m n columns ordered (axis j, component alpha).
using BoundaryData = Eigen::MatrixXcd;

namespace detail {

inline BoundaryData transform_data(const GridSpec& grid, BoundaryData M, bool forward) {
  for (int c = 0; c < M.cols(); ++c) transform_column(grid, M.col(c), forward);
  return M;
}

}  // namespace detail

inline Field embed_perp(const GridSpec& grid, const BoundaryData& f) {
  require(f.rows() == grid.points() && f.cols() == grid.m, "embed_perp: data must be points x m");
  Field F(grid);
  F.values().leftCols(grid.m) = f;
  return F;
}

inline Field embed_tangential(const GridSpec& grid, const BoundaryData& g) {
  require(g.rows() == grid.points() && g.cols() == grid.m * grid.n, "embed_tangential: data must be points x mn");
  Field F(grid);
  F.values().rightCols(grid.m * grid.n) = g;
  return F;
}

inline BoundaryData perp_part(const Field& F) {
  return to_physical(F).values().leftCols(F.grid().m);
}

inline BoundaryData tangential_part(const Field& F) {
  return to_physical(F).values().rightCols(F.grid().m * F.grid().n);
}

inline BoundaryData remove_mean(const BoundaryData& f) {
  BoundaryData g = f;
  g.rowwise() -= f.colwise().mean();
  return g;
}

/// Boundary pairing sum conj(g) f h^n.
inline cplx boundary_inner(const GridSpec& grid, const BoundaryData& g, const BoundaryData& f) {
  return (g.array().conjugate() * f.array()).sum() * grid.cell_volume();
}

inline double boundary_norm(const GridSpec& grid, const BoundaryData& f) {
  return std::sqrt(f.squaredNorm() * grid.cell_volume());
}

/// Spectral tangential gradient of scalar data.
inline BoundaryData gradient(const GridSpec& grid, const BoundaryData& f) {
  require(f.rows() == grid.points() && f.cols() == grid.m, "gradient: data must be points x m");
  BoundaryData fs = detail::transform_data(grid, f, true);
  BoundaryData gs(grid.points(), grid.m * grid.n);
  for (int p = 0; p < grid.points(); ++p) {
    auto k = grid.frequency(p);
    for (int j = 0; j < grid.n; ++j)
      for (int a = 0; a < grid.m; ++a) gs(p, j * grid.m + a) = cplx(0.0, k[j]) * fs(p, a);
  }
  return detail::transform_data(grid, gs, false);
}

/// Mean-zero u minimising ||grad u - g||; exact when g is a gradient.
inline BoundaryData potential(const GridSpec& grid, const BoundaryData& g) {
  require(g.rows() == grid.points() && g.cols() == grid.m * grid.n, "potential: data must be points x mn");
  BoundaryData gs = detail::transform_data(grid, g, true);
  BoundaryData us = BoundaryData::Zero(grid.points(), grid.m);
  for (int p = 1; p < grid.points(); ++p) {
    auto k = grid.frequency(p);
    const double k2 = static_cast<double>(k[0]) * k[0] + static_cast<double>(k[1]) * k[1];
    for (int a = 0; a < grid.m; ++a) {
      cplx s = 0.0;
      for (int j = 0; j < grid.n; ++j) s += cplx(0.0, -k[j]) * gs(p, j * grid.m + a);
      us(p, a) = s / k2;
    }
  }
  return detail::transform_data(grid, us, false);
}

/// Orthonormal bases of the ranges of chi^+(DB) and chi^-(DB).
struct SpectralHardyBasis {
  Eigen::MatrixXcd plus, minus;
  int d_plus() const { return static_cast<int>(plus.cols()); }
  int d_minus() const { return static_cast<int>(minus.cols()); }
};

inline SpectralHardyBasis hardy_basis(const Calculus& calc) {
  const auto& s = calc.spectrum();
  std::vector<int> ip, im;
  for (int i = 0; i < s.lambda.size(); ++i) (s.lambda(i).real() > 0 ? ip : im).push_back(i);
  auto orth = [&](const std::vector<int>& idx) {
    Eigen::MatrixXcd M(s.QV.rows(), static_cast<int>(idx.size()));
    for (size_t j = 0; j < idx.size(); ++j) M.col(j) = s.QV.col(idx[j]);
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(M);
    return Eigen::MatrixXcd(qr.householderQ() * Eigen::MatrixXcd::Identity(M.rows(), M.cols()));
  };
  return {orth(ip), orth(im)};
}

/// (chi^+(DB) P h, chi^-(DB) P h); their sum is P h.
inline std::pair<Field, Field> spectral_split(const Calculus& calc, const Field& h) {
  auto e = calc.expand(OperatorKind::DB, calc.system().apply_P(h));
  return {e.eval(chi_plus()), e.eval(chi_minus())};
}

enum class BVPKind { regularity, neumann, dirichlet };

inline std::string to_string(BVPKind k) {
  switch (k) {
    case BVPKind::regularity: return "regularity";
    case BVPKind::neumann: return "neumann";
    case BVPKind::dirichlet: return "dirichlet";
  }
  return "?";
}

/// A solution given by its conormal gradient h at t = 0 in the Hardy space.
/// Interior: grad_A u(t) = e^{-t|DB|} h, and u(t) = (e^{-t|BD|} v0)_perp + c
/// with D v0 = -h, c fixing u(0) to be mean-zero.
class BVPSolution {
 public:
  BVPKind kind = BVPKind::regularity;
  Field h;
  double trace_residual = 0.0;
  double condition = 1.0;

  Field conormal_gradient(double t) const { return grad_.eval(exp_abs(t)); }

  BoundaryData potential(double t) const {
    BoundaryData u = perp_part(pot_.eval(exp_abs(t)));
    u.rowwise() -= offset_;
    return u;
  }

  BoundaryData neumann_trace() const { return perp_part(h); }
  BoundaryData dirichlet_trace() const { return potential(0.0); }

 private:
  friend BVPSolution make_solution(std::shared_ptr<const Calculus>, BVPKind, Field, double, double);
  std::shared_ptr<const Calculus> calc_;
  Calculus::Expansion grad_, pot_;
  Eigen::RowVectorXcd offset_;
};

inline BVPSolution make_solution(std::shared_ptr<const Calculus> calc, BVPKind kind, Field h, double residual,
                                 double condition) {
  BVPSolution s;
  s.kind = kind;
  s.trace_residual = residual;
  s.condition = condition;
  s.calc_ = calc;
  s.grad_ = calc->expand(OperatorKind::DB, h);
  // v0 = -BQ T_R^{-1} Q* h lies in the BD Hardy space and D v0 = -h.
  const auto& sp = calc->spectrum();
  Eigen::VectorXcd y = sp.V_inv * (sp.Q.adjoint() * to_physical(h).vector());
  for (int i = 0; i < y.size(); ++i) y(i) /= sp.lambda(i);
  Field v0 = Field::from_vector(calc->grid(), -(sp.BQV * y));
  s.pot_ = calc->expand(OperatorKind::BD, v0);
  s.offset_ = perp_part(v0).colwise().mean();
  s.h = std::move(h);
  return s;
}

/// Trace-map inversion on the Hardy space for one coefficient field.
class BoundaryProblems {
 public:
  explicit BoundaryProblems(const CoefficientMatrix& A)
      : A_(A), calc_(std::make_shared<Calculus>(FirstOrderSystem::from_coefficients(A))) {}

  const CoefficientMatrix& coefficients() const { return A_; }
  const Calculus& calculus() const { return *calc_; }
  std::shared_ptr<const Calculus> calculus_ptr() const { return calc_; }
  const GridSpec& grid() const { return calc_->grid(); }

  const SpectralHardyBasis& hardy() const {
    std::call_once(once_, [&] { hardy_ = hardy_basis(*calc_); });
    return hardy_;
  }

  BVPSolution solve_regularity(const BoundaryData& f) const {
    const auto& g = grid();
    require(f.rows() == g.points() && f.cols() == g.m * g.n, "regularity: datum must be points x mn");
    require(f.colwise().sum().norm() <= 1e-10 * std::max(1.0, f.norm()) * g.points(),
            "regularity: datum must be mean-zero");
    const double fn = f.norm();
    require(fn == 0.0 || (gradient(g, potential(g, f)) - f).norm() <= 1e-8 * fn,
            "regularity: datum is not a gradient field");
    return trace_solve(BVPKind::regularity, f, g.m, g.m * g.n,
                       "regularity problem numerically not solvable at p=2");
  }

  BVPSolution solve_neumann(const BoundaryData& gdat) const {
    const auto& g = grid();
    require(gdat.rows() == g.points() && gdat.cols() == g.m, "neumann: datum must be points x m");
    require(gdat.colwise().sum().norm() <= 1e-10 * std::max(1.0, gdat.norm()) * g.points(),
            "neumann: datum must be mean-zero");
    return trace_solve(BVPKind::neumann, gdat, 0, g.m, "neumann problem numerically not solvable at p=2");
  }

  /// Dirichlet datum f: regularity solve with grad f; u(0) = f.
  BVPSolution solve_dirichlet(const BoundaryData& f) const {
    const auto& g = grid();
    require(f.rows() == g.points() && f.cols() == g.m, "dirichlet: datum must be points x m");
    require(f.colwise().sum().norm() <= 1e-10 * std::max(1.0, f.norm()) * g.points(),
            "dirichlet: datum must be mean-zero");
    BVPSolution s = solve_regularity(gradient(g, f));
    s.kind = BVPKind::dirichlet;
    return s;
  }

  /// Gamma_DN f = conormal derivative of the solution with Dirichlet data f.
  BoundaryData dirichlet_to_neumann(const BoundaryData& f) const {
    return perp_part(solve_regularity(gradient(grid(), f)).h);
  }

  /// Gamma_ND g = boundary potential of the solution with Neumann data g.
  BoundaryData neumann_to_dirichlet(const BoundaryData& gdat) const {
    return potential(grid(), tangential_part(solve_neumann(gdat).h));
  }

 private:
  BVPSolution trace_solve(BVPKind kind, const BoundaryData& datum, int first_channel, int channels,
                          const std::string& failure) const {
    const auto& g = grid();
    const auto& H = hardy().plus;
    const int P = g.points();
    Eigen::MatrixXcd rows(P * channels, H.cols());
    Eigen::VectorXcd rhs(P * channels);
    for (int c = 0; c < channels; ++c) {
      rows.middleRows(c * P, P) = H.middleRows((first_channel + c) * P, P);
      rhs.segment(c * P, P) = datum.col(c);
    }
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(rows, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double cond = sv.size() ? sv(0) / sv(sv.size() - 1) : 1.0;
    if (!(cond <= 1e6)) {
      std::ostringstream os;
      os << failure << " (trace map condition number " << cond << ")";
      throw Error(os.str());
    }
    Eigen::VectorXcd alpha = svd.solve(rhs);
    const double rn = rhs.norm();
    const double res = rn > 0 ? (rows * alpha - rhs).norm() / rn : (rows * alpha).norm();
    return make_solution(calc_, kind, Field::from_vector(g, H * alpha), res, cond);
  }

  CoefficientMatrix A_;
  std::shared_ptr<Calculus> calc_;
  mutable std::once_flag once_;
  mutable SpectralHardyBasis hardy_;
};

// Layer potentials. t = +0.0 and -0.0 give the one-sided boundary limits.

/// grad_A S_t f = +e^{-t|DB|} chi^+(DB)[f;0] (t > 0), -e^{-|t||DB|} chi^-(DB)[f;0] (t < 0):
/// both branches decay away from the boundary.
inline Field grad_single_layer(const Calculus& calc, double t, const BoundaryData& f) {
  const auto& g = calc.grid();
  require(f.colwise().sum().norm() <= 1e-10 * std::max(1.0, f.norm()) * g.points(),
          "single layer: f must be mean-zero");
  auto e = calc.expand(OperatorKind::DB, embed_perp(g, f));
  if (!std::signbit(t))
    return e.eval([t](cplx z) { return z.real() > 0 ? std::exp(-t * z) : cplx(0.0); }, 0.0);
  return e.eval([t](cplx z) { return z.real() < 0 ? -std::exp(-t * z) : cplx(0.0); }, 0.0);
}

/// S_t f = -(D^{-1} grad_A S_t f)_perp
inline BoundaryData single_layer(const Calculus& calc, double t, const BoundaryData& f) {
  return -perp_part(calc.system().apply_D_inverse(grad_single_layer(calc, t, f)));
}

/// D_t f = -(P e^{-t|BD|} chi^+(BD)[f;0])_perp (t > 0), +(P e^{-|t||BD|} chi^-(BD)[f;0])_perp (t < 0).
inline BoundaryData double_layer(const Calculus& calc, double t, const BoundaryData& f) {
  const auto& g = calc.grid();
  require(f.colwise().sum().norm() <= 1e-10 * std::max(1.0, f.norm()) * g.points(),
          "double layer: f must be mean-zero");
  auto e = calc.expand(OperatorKind::BD, embed_perp(g, f));
  Field w = !std::signbit(t)
                ? e.eval([t](cplx z) { return z.real() > 0 ? -std::exp(-t * z) : cplx(0.0); }, 0.0)
                : e.eval([t](cplx z) { return z.real() < 0 ? std::exp(-t * z) : cplx(0.0); }, 0.0);
  return perp_part(calc.system().apply_P(w));
}

struct LayerJumps {
  double single = 0.0;  // |grad S_{0+} f - grad S_{0-} f - [f;0]| / |f|
  double dbl = 0.0;     // |D_{0+} f - D_{0-} f + f| / |f|
};

inline LayerJumps layer_jumps(const Calculus& calc, const BoundaryData& f) {
  const auto& g = calc.grid();
  const double fn = boundary_norm(g, f);
  LayerJumps j;
  Field js = grad_single_layer(calc, +0.0, f) - grad_single_layer(calc, -0.0, f) - embed_perp(g, f);
  j.single = l2_norm(js) / fn;
  j.dbl = boundary_norm(g, double_layer(calc, +0.0, f) - double_layer(calc, -0.0, f) + f) / fn;
  return j;
}

struct DualityResiduals {
  double single = 0.0;
  double dbl = 0.0;
};

/// <g, S_t^A f> = <S_{-t}^{A*} g, f> and <g, D_t^A f> = <(grad_{A*} S_{-t}^{A*} g)_perp, f>;
/// `adj` is the calculus of A*.
inline DualityResiduals layer_duality_check(const Calculus& calc, const Calculus& adj, double t,
                                            const BoundaryData& f, const BoundaryData& gdat) {
  require(t != 0.0, "layer duality: t must be nonzero");
  const auto& grid = calc.grid();
  auto rel = [](cplx a, cplx b, double scale) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), scale}); };
  const double scale = 1e-300;
  DualityResiduals r;
  cplx l1 = boundary_inner(grid, gdat, single_layer(calc, t, f));
  cplx r1 = boundary_inner(grid, single_layer(adj, -t, gdat), f);
  r.single = rel(l1, r1, scale);
  cplx l2 = boundary_inner(grid, gdat, double_layer(calc, t, f));
  cplx r2 = boundary_inner(grid, perp_part(grad_single_layer(adj, -t, gdat)), f);
  r.dbl = rel(l2, r2, scale);
  return r;
}

/// max over t of |u(t) - S_t(du/dnu_A) + D_t(u(0))| / |u(t)|, comparing
/// mean-free parts (on the torus the identity holds modulo constants).
inline double boundary_layer_representation_check(const Calculus& calc, const BVPSolution& sol,
                                                  const std::vector<double>& ts) {
  const auto& g = calc.grid();
  const BoundaryData nu = sol.neumann_trace();
  const BoundaryData u0 = remove_mean(sol.dirichlet_trace());
  double worst = 0.0;
  for (double t : ts) {
    BoundaryData u = remove_mean(sol.potential(t));
    BoundaryData rep = remove_mean(BoundaryData(single_layer(calc, t, nu) - double_layer(calc, t, u0)));
    const double un = boundary_norm(g, u);
    const double d = boundary_norm(g, u - rep);
    worst = std::max(worst, un > 0 ? d / un : d);
  }
  return worst;
}

namespace detail {

// Fornberg weights for the derivative of order `order` at x0.
inline std::vector<double> fd_weights(double x0, const std::vector<double>& x, int order) {
  const int n = static_cast<int>(x.size()) - 1;
  std::vector<std::vector<double>> c(n + 1, std::vector<double>(order + 1, 0.0));
  double c1 = 1.0, c4 = x[0] - x0;
  c[0][0] = 1.0;
  for (int i = 1; i <= n; ++i) {
    const int mn = std::min(i, order);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i] - x0;
    for (int j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(n + 1);
  for (int i = 0; i <= n; ++i) w[i] = c[i][order];
  return w;
}

}  // namespace detail

/// max over interior ladder points of |d_t F + DB F| / |DB F| for
/// F(t) = grad_A u(t), d_t by a (2 half_width + 1)-point finite difference
/// on the ladder.
inline double equation_residual(const Calculus& calc, const BVPSolution& sol, const TLadder& ladder,
                                int half_width = 3) {
  const int w = half_width;
  require(ladder.size() >= 2 * w + 1, "equation residual: ladder too short for the stencil");
  std::vector<Field> F;
  for (int j = 0; j < ladder.size(); ++j) F.push_back(sol.conormal_gradient(ladder.t(j)));
  double worst = 0.0;
  for (int j = w; j + w < ladder.size(); ++j) {
    std::vector<double> x;
    for (int i = j - w; i <= j + w; ++i) x.push_back(ladder.t(i));
    auto c = detail::fd_weights(ladder.t(j), x, 1);
    Field dt(calc.grid());
    for (int i = 0; i <= 2 * w; ++i) dt += c[i] * F[j - w + i];
    Field DBF = calc.system().apply(OperatorKind::DB, F[j]);
    const double den = l2_norm(DBF);
    if (den <= 1e-14 * std::max(1.0, l2_norm(sol.h))) continue;
    worst = std::max(worst, l2_norm(dt + DBF) / den);
  }
  return worst;
}

struct KatoCheck {
  double sqrt_form = 0.0;      // ||(sgn(DB)[0; grad u])_perp||^2 = ||L^{1/2} u||^2
  double quadratic_form = 0.0; // Re <d grad u, grad u>
  double relative_error() const {
    return std::abs(sqrt_form - quadratic_form) / std::max(std::abs(quadratic_form), 1e-300);
  }
};

/// For block-diagonal A = diag(a, d): the square-root form against the
/// direct quadratic form of d.
inline KatoCheck kato_check(const Calculus& calc, const CoefficientMatrix& A, const BoundaryData& u) {
  const auto& g = calc.grid();
  const BoundaryData grad = gradient(g, u);
  Field s = calc.apply(sgn(), OperatorKind::DB, embed_tangential(g, grad));
  KatoCheck k;
  const double sn = boundary_norm(g, perp_part(s));
  k.sqrt_form = sn * sn;
  cplx q = 0.0;
  for (int p = 0; p < g.points(); ++p) {
    Eigen::VectorXcd gp = grad.row(p).transpose();
    q += gp.dot(A.d(p) * gp);
  }
  k.quadratic_form = (q * g.cell_volume()).real();
  return k;
}

}  // namespace halfspace
