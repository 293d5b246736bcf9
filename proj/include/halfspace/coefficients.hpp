#pragma once

#include <cstdint>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <boost/math/tools/roots.hpp>

#include "halfspace/symbols.hpp"

namespace halfspace {

using PointwiseMatrices = std::vector<Eigen::MatrixXcd>;

/// Applies a per-point N x N matrix field to columns in channel-major layout.
inline Eigen::MatrixXcd apply_pointwise(const GridSpec& grid, const PointwiseMatrices& M,
                                        const Eigen::MatrixXcd& cols) {
  const int P = grid.points();
  const int N = grid.channels();
  Eigen::MatrixXcd out(cols.rows(), cols.cols());
  for (int j = 0; j < cols.cols(); ++j) {
    Eigen::Map<const Eigen::MatrixXcd> x(cols.col(j).data(), P, N);
    Eigen::Map<Eigen::MatrixXcd> y(out.col(j).data(), P, N);
    for (int p = 0; p < P; ++p) y.row(p) = x.row(p) * M[p].transpose();
  }
  return out;
}

/// A(x) in the block layout [[a, b], [c, d]], a: m x m, d: mn x mn.
class CoefficientMatrix {
 public:
  CoefficientMatrix() = default;
  CoefficientMatrix(GridSpec grid, PointwiseMatrices values) : grid_(grid), values_(std::move(values)) {
    require(static_cast<int>(values_.size()) == grid_.points(), "coefficients: one matrix per grid point");
    for (const auto& v : values_) {
      require(v.rows() == grid_.channels() && v.cols() == grid_.channels(),
              "coefficients: matrix shape must be N x N");
      require(v.allFinite(), "coefficients: non-finite entry");
    }
  }

  static CoefficientMatrix identity(const GridSpec& grid) {
    return {grid, PointwiseMatrices(grid.points(), Eigen::MatrixXcd::Identity(grid.channels(), grid.channels()))};
  }

  static CoefficientMatrix constant(const GridSpec& grid, const Eigen::MatrixXcd& A) {
    return {grid, PointwiseMatrices(grid.points(), A)};
  }

  static CoefficientMatrix sampled(const GridSpec& grid,
                                   const std::function<Eigen::MatrixXcd(const std::array<double, 2>&)>& fn) {
    PointwiseMatrices v;
    v.reserve(grid.points());
    for (int p = 0; p < grid.points(); ++p) v.push_back(fn(grid.coordinates(p)));
    return {grid, std::move(v)};
  }

  /// diag(a, d) with a: m x m and d: mn x mn blocks given per point.
  static CoefficientMatrix block_diagonal(const GridSpec& grid, const PointwiseMatrices& a,
                                          const PointwiseMatrices& d) {
    const int m = grid.m;
    PointwiseMatrices v(grid.points(), Eigen::MatrixXcd::Zero(grid.channels(), grid.channels()));
    for (int p = 0; p < grid.points(); ++p) {
      v[p].topLeftCorner(m, m) = a[p];
      v[p].bottomRightCorner(grid.channels() - m, grid.channels() - m) = d[p];
    }
    return {grid, std::move(v)};
  }

  const GridSpec& grid() const { return grid_; }
  const Eigen::MatrixXcd& at(int p) const { return values_[p]; }
  const PointwiseMatrices& values() const { return values_; }

  Eigen::MatrixXcd a(int p) const { return values_[p].topLeftCorner(grid_.m, grid_.m); }
  Eigen::MatrixXcd b(int p) const { return values_[p].topRightCorner(grid_.m, rest()); }
  Eigen::MatrixXcd c(int p) const { return values_[p].bottomLeftCorner(rest(), grid_.m); }
  Eigen::MatrixXcd d(int p) const { return values_[p].bottomRightCorner(rest(), rest()); }

  /// Pointwise adjoint A*(x).
  CoefficientMatrix adjoint() const {
    PointwiseMatrices v;
    for (const auto& x : values_) v.push_back(x.adjoint());
    return {grid_, std::move(v)};
  }

  double sup_norm() const {
    double s = 0.0;
    for (const auto& x : values_) s = std::max(s, x.jacobiSvd().singularValues()(0));
    return s;
  }

  /// Largest pointwise operator-norm distance to another coefficient field.
  double distance(const CoefficientMatrix& o) const {
    double s = 0.0;
    for (size_t p = 0; p < values_.size(); ++p)
      s = std::max(s, (values_[p] - o.values_[p]).jacobiSvd().singularValues()(0));
    return s;
  }

 private:
  int rest() const { return grid_.channels() - grid_.m; }

  GridSpec grid_;
  PointwiseMatrices values_;
};

/// B = hat(A) per grid point.
class TransformedB {
 public:
  TransformedB() = default;
  TransformedB(GridSpec grid, PointwiseMatrices values, double max_a_condition = 1.0)
      : grid_(grid), values_(std::move(values)), max_a_condition_(max_a_condition) {}

  const GridSpec& grid() const { return grid_; }
  const Eigen::MatrixXcd& at(int p) const { return values_[p]; }
  const PointwiseMatrices& values() const { return values_; }
  /// Largest condition number of the a-block met while building B.
  double max_a_condition() const { return max_a_condition_; }

  Field apply(const Field& f) const {
    require(f.grid() == grid_, "B: grid mismatch");
    Field g = to_physical(f);
    Eigen::MatrixXcd out = apply_pointwise(grid_, values_, g.vector());
    return Field::from_vector(grid_, out.col(0));
  }

  TransformedB adjoint() const {
    PointwiseMatrices v;
    for (const auto& x : values_) v.push_back(x.adjoint());
    return {grid_, std::move(v), max_a_condition_};
  }

  double sup_norm() const {
    double s = 0.0;
    for (const auto& x : values_) s = std::max(s, x.jacobiSvd().singularValues()(0));
    return s;
  }

 private:
  GridSpec grid_;
  PointwiseMatrices values_;
  double max_a_condition_ = 1.0;
};

namespace detail {

inline Eigen::MatrixXcd hat_block(const Eigen::MatrixXcd& A, int m, int p, const GridSpec& grid,
                                  double& cond) {
  const int N = static_cast<int>(A.rows());
  const int r = N - m;
  Eigen::MatrixXcd a = A.topLeftCorner(m, m), b = A.topRightCorner(m, r);
  Eigen::MatrixXcd c = A.bottomLeftCorner(r, m), d = A.bottomRightCorner(r, r);
  Eigen::VectorXd sv = a.jacobiSvd().singularValues();
  cond = sv(m - 1) > 0 ? sv(0) / sv(m - 1) : std::numeric_limits<double>::infinity();
  if (!(cond < 1e14)) {
    auto x = grid.coordinates(p);
    std::ostringstream os;
    os << "hat_transform: a-block singular at grid point " << p << " (x = " << x[0];
    if (grid.n == 2) os << ", " << x[1];
    os << "), condition number " << cond;
    throw Error(os.str());
  }
  Eigen::MatrixXcd ai = a.partialPivLu().inverse();
  Eigen::MatrixXcd B(N, N);
  B.topLeftCorner(m, m) = ai;
  B.topRightCorner(m, r) = -ai * b;
  B.bottomLeftCorner(r, m) = c * ai;
  B.bottomRightCorner(r, r) = d - c * ai * b;
  return B;
}

}  // namespace detail

/// B = [[1, 0], [c, d]] [[a, b], [0, 1]]^{-1} pointwise.
inline TransformedB hat_transform(const CoefficientMatrix& A) {
  const auto& grid = A.grid();
  PointwiseMatrices out;
  out.reserve(grid.points());
  double worst = 1.0;
  for (int p = 0; p < grid.points(); ++p) {
    double cond = 1.0;
    out.push_back(detail::hat_block(A.at(p), grid.m, p, grid, cond));
    worst = std::max(worst, cond);
  }
  return {grid, std::move(out), worst};
}

/// The hat map is an involution, so this recovers A from B.
inline CoefficientMatrix coefficients_from(const TransformedB& B) {
  const auto& grid = B.grid();
  PointwiseMatrices out;
  for (int p = 0; p < grid.points(); ++p) {
    double cond = 1.0;
    out.push_back(detail::hat_block(B.at(p), grid.m, p, grid, cond));
  }
  return {grid, std::move(out)};
}

/// Largest residual of B [[a, b], [0, 1]] = [[1, 0], [c, d]] over the grid.
inline double hat_identity_residual(const CoefficientMatrix& A, const TransformedB& B) {
  const int m = A.grid().m;
  const int N = A.grid().channels();
  double worst = 0.0;
  for (int p = 0; p < A.grid().points(); ++p) {
    Eigen::MatrixXcd left = A.at(p), right = A.at(p);
    left.bottomRows(N - m).setZero();
    left.bottomRightCorner(N - m, N - m).setIdentity();
    right.topRows(m).setZero();
    right.topLeftCorner(m, m).setIdentity();
    worst = std::max(worst, (B.at(p) * left - right).norm() / std::max(1.0, right.norm()));
  }
  return worst;
}

struct AccretivityReport {
  double kappa = 0.0;        // lower accretivity bound on the range of D
  double omega = 0.0;        // sector half-angle of the numerical range
  double sup_norm = 0.0;     // M = sup_x |B(x)|
  bool pointwise_accretive = false;
  double pointwise_kappa = 0.0;
  std::string method;
};

/// Orthonormal eigenvectors of a Hermitian multiplier with nonzero
/// eigenvalue, as physical-space columns, with those eigenvalues.
struct RangeBasis {
  Eigen::MatrixXcd Q;
  Eigen::VectorXd eigenvalues;
};

inline RangeBasis range_eigenpairs(const MultiplierSymbol& D) {
  const auto& grid = D.grid();
  const int P = grid.points();
  std::vector<Eigen::VectorXcd> cols;
  std::vector<double> vals;
  for (int pk = 0; pk < P; ++pk) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(D.at(pk));
    const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    auto k = grid.frequency(pk);
    Eigen::VectorXcd wave(P);
    for (int q = 0; q < P; ++q) {
      auto x = grid.coordinates(q);
      wave(q) = std::exp(cplx(0.0, k[0] * x[0] + k[1] * x[1])) / std::sqrt(static_cast<double>(P));
    }
    for (int e = 0; e < es.eigenvalues().size(); ++e) {
      if (std::abs(es.eigenvalues()(e)) <= 1e-12 * scale) continue;
      Eigen::VectorXcd col = Eigen::VectorXcd::Zero(grid.dofs());
      for (int c = 0; c < grid.channels(); ++c) col.segment(c * P, P) = wave * es.eigenvectors()(c, e);
      cols.push_back(std::move(col));
      vals.push_back(es.eigenvalues()(e));
    }
  }
  RangeBasis out;
  out.Q.resize(grid.dofs(), static_cast<int>(cols.size()));
  out.eigenvalues.resize(static_cast<int>(vals.size()));
  for (size_t j = 0; j < cols.size(); ++j) {
    out.Q.col(j) = cols[j];
    out.eigenvalues(j) = vals[j];
  }
  return out;
}

/// Orthonormal basis of the range of a Hermitian multiplier.
inline Eigen::MatrixXcd range_basis(const MultiplierSymbol& D) { return range_eigenpairs(D).Q; }

namespace detail {

inline double min_hermitian_eigenvalue(const Eigen::MatrixXcd& M) {
  Eigen::MatrixXcd H = 0.5 * (M + M.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

// Smallest phi with the numerical range of M inside the sector |arg z| <= phi,
// given Re M > 0. Each side is a sign change of
// lambda_min(Re(e^{+-i(pi/2 - phi)} M)) on [0, pi/2], located by TOMS 748.
inline double sector_angle(const Eigen::MatrixXcd& M) {
  const Eigen::MatrixXcd H = 0.5 * (M + M.adjoint());
  const Eigen::MatrixXcd K = cplx(0.0, -0.5) * (M - M.adjoint());
  const double tol = 1e-12 * M.norm() / std::sqrt(static_cast<double>(M.rows()));
  const double half_pi = std::numbers::pi / 2;
  double omega = 0.0;
  for (double side : {1.0, -1.0}) {
    auto g = [&](double phi) {
      const double th = half_pi - phi;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(std::cos(th) * H - side * std::sin(th) * K,
                                                         Eigen::EigenvaluesOnly);
      return es.eigenvalues()(0) + tol;
    };
    const double g0 = g(0.0);
    if (g0 >= 0.0) continue;
    std::uintmax_t iters = 60;
    auto [a, b] = boost::math::tools::toms748_solve(g, 0.0, half_pi, g0, g(half_pi),
                                                    boost::math::tools::eps_tolerance<double>(44), iters);
    omega = std::max(omega, b);
  }
  return omega;
}

}  // namespace detail

/// kappa and omega of the compression of B to the range of D.
inline AccretivityReport accretivity_estimate(const TransformedB& B, const MultiplierSymbol& D) {
  const auto& grid = B.grid();
  require(grid.dofs() <= 8192, "accretivity_estimate: grid too large for the dense compression");
  AccretivityReport rep;
  rep.method = "dense compression P B P, sector angle by root finding";
  rep.sup_norm = B.sup_norm();

  rep.pointwise_kappa = std::numeric_limits<double>::infinity();
  for (const auto& b : B.values())
    rep.pointwise_kappa = std::min(rep.pointwise_kappa, detail::min_hermitian_eigenvalue(b));
  rep.pointwise_accretive = rep.pointwise_kappa > 0.0;

  Eigen::MatrixXcd Q = range_basis(D);
  Eigen::MatrixXcd BR = Q.adjoint() * apply_pointwise(grid, B.values(), Q);
  rep.kappa = detail::min_hermitian_eigenvalue(BR);
  if (!(rep.kappa > 0.0)) throw Error("B not accretive on range of D");
  rep.omega = detail::sector_angle(BR);
  return rep;
}

/// Certificate from pointwise data only: kappa = min_x lambda_min(Re B(x))
/// and omega the largest pointwise sector angle. Both bound the compression.
inline AccretivityReport pointwise_accretivity(const TransformedB& B) {
  AccretivityReport rep;
  rep.method = "pointwise bound";
  rep.sup_norm = B.sup_norm();
  rep.pointwise_kappa = std::numeric_limits<double>::infinity();
  for (const auto& b : B.values())
    rep.pointwise_kappa = std::min(rep.pointwise_kappa, detail::min_hermitian_eigenvalue(b));
  rep.pointwise_accretive = rep.pointwise_kappa > 0.0;
  if (!rep.pointwise_accretive) throw Error("B not pointwise accretive; no certificate at this grid size");
  rep.kappa = rep.pointwise_kappa;
  for (const auto& b : B.values()) rep.omega = std::max(rep.omega, detail::sector_angle(b));
  return rep;
}

}  // namespace halfspace
