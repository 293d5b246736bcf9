#pragma once

#include <functional>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "halfspace/error.hpp"

namespace halfspace {

struct GmresOptions {
  int restart = 50;
  int max_iterations = 500;
  double tolerance = 1e-10;  // relative residual
};

struct GmresResult {
  Eigen::VectorXcd x;
  int iterations = 0;
  std::vector<double> residual_history;  // relative, one entry per inner step
};

using LinearMap = std::function<Eigen::VectorXcd(const Eigen::VectorXcd&)>;

/// Restarted GMRES with right preconditioning: solves A M^{-1} y = b and
/// returns x = M^{-1} y. Throws with the residual history on stagnation.
inline GmresResult gmres(const LinearMap& A, const LinearMap& M_inv, const Eigen::VectorXcd& b,
                         const GmresOptions& opt = {}) {
  using Vec = Eigen::VectorXcd;
  GmresResult res;
  const double bnorm = b.norm();
  res.x = Vec::Zero(b.size());
  if (bnorm == 0.0) return res;

  const int m = opt.restart;
  while (res.iterations < opt.max_iterations) {
    Vec r = b - A(res.x);
    double beta = r.norm();
    if (beta <= opt.tolerance * bnorm) {
      res.residual_history.push_back(beta / bnorm);
      return res;
    }
    Eigen::MatrixXcd V(b.size(), m + 1);
    Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(m + 1, m);
    std::vector<Eigen::JacobiRotation<std::complex<double>>> rot(m);
    Vec g = Vec::Zero(m + 1);
    g(0) = beta;
    V.col(0) = r / beta;
    int k = 0;
    for (; k < m && res.iterations < opt.max_iterations; ++k) {
      ++res.iterations;
      Vec w = A(M_inv(V.col(k)));
      for (int i = 0; i <= k; ++i) {  // modified Gram-Schmidt, two passes
        std::complex<double> h = V.col(i).dot(w);
        H(i, k) += h;
        w -= h * V.col(i);
      }
      for (int i = 0; i <= k; ++i) {
        std::complex<double> h = V.col(i).dot(w);
        H(i, k) += h;
        w -= h * V.col(i);
      }
      H(k + 1, k) = w.norm();
      if (std::abs(H(k + 1, k)) > 0.0) V.col(k + 1) = w / H(k + 1, k);
      for (int i = 0; i < k; ++i) {
        Eigen::Vector2cd v(H(i, k), H(i + 1, k));
        v.applyOnTheLeft(0, 1, rot[i].adjoint());
        H(i, k) = v(0);
        H(i + 1, k) = v(1);
      }
      rot[k].makeGivens(H(k, k), H(k + 1, k));
      {
        Eigen::Vector2cd v(H(k, k), H(k + 1, k));
        v.applyOnTheLeft(0, 1, rot[k].adjoint());
        H(k, k) = v(0);
        H(k + 1, k) = 0.0;
        Eigen::Vector2cd gv(g(k), g(k + 1));
        gv.applyOnTheLeft(0, 1, rot[k].adjoint());
        g(k) = gv(0);
        g(k + 1) = gv(1);
      }
      const double rel = std::abs(g(k + 1)) / bnorm;
      res.residual_history.push_back(rel);
      if (rel <= opt.tolerance || std::abs(H(k + 1, k)) == 0.0) {
        ++k;
        break;
      }
    }
    Vec y = H.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(g.head(k));
    res.x += M_inv(V.leftCols(k) * y);
    if (res.residual_history.back() <= opt.tolerance) {
      // Confirm with the true residual; the recurrence can drift.
      if ((b - A(res.x)).norm() <= 10 * opt.tolerance * bnorm) return res;
    }
  }
  std::ostringstream os;
  os << "gmres: stagnation after " << res.iterations << " iterations; residual history:";
  const size_t stride = std::max<size_t>(1, res.residual_history.size() / 20);
  for (size_t i = 0; i < res.residual_history.size(); i += stride) os << ' ' << res.residual_history[i];
  throw Error(os.str());
}

}  // namespace halfspace
