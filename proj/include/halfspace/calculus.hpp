#pragma once

#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "halfspace/first_order.hpp"
#include "halfspace/holomorphic.hpp"
#include "halfspace/parallel.hpp"

namespace halfspace {

enum class CalculusPath { contour, eigen, automatic };

/// Spectral data of DB and BD on the range of D. With Q an orthonormal
/// basis of R(D), both operators act on their ranges through the same
/// reduced matrix T_R = D_R B_R, B_R = Q* B Q:
///   DB (Q c)  = Q  (T_R c),   null space B^{-1} N(D),
///   BD (BQ c) = BQ (T_R c),   null space N(D).
struct ReducedSpectrum {
  Eigen::MatrixXcd Q, BQ;
  Eigen::VectorXd d;                        // eigenvalues of D on Q
  Eigen::MatrixXcd BR;
  Eigen::PartialPivLU<Eigen::MatrixXcd> BR_lu;
  Eigen::VectorXcd lambda;                  // eigenvalues of T_R
  Eigen::MatrixXcd V, V_inv;                // T_R = V diag(lambda) V^{-1}
  Eigen::MatrixXcd QV, BQV;
  double cond_V = 1.0;
  double cond_BR = 1.0;
  double spectral_radius = 0.0;
  int blocks = 0;                           // decoupled diagonal blocks of T_R
  bool normal = false;
};

namespace detail {

inline double condition_number(const Eigen::MatrixXcd& M) {
  if (M.size() == 0) return 1.0;
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(M);
  const Eigen::VectorXd s = svd.singularValues();
  return s(s.size() - 1) > 0 ? s(0) / s(s.size() - 1) : std::numeric_limits<double>::infinity();
}

// Connected components of the coupling graph |M(i,j)| > thr.
inline std::vector<std::vector<int>> coupling_blocks(const Eigen::MatrixXcd& M, double thr) {
  const int r = static_cast<int>(M.rows());
  std::vector<int> parent(r);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (int j = 0; j < r; ++j)
    for (int i = 0; i < r; ++i)
      if (i != j && std::abs(M(i, j)) > thr) parent[find(i)] = find(j);
  std::vector<std::vector<int>> out;
  std::vector<int> slot(r, -1);
  for (int i = 0; i < r; ++i) {
    int root = find(i);
    if (slot[root] < 0) {
      slot[root] = static_cast<int>(out.size());
      out.emplace_back();
    }
    out[slot[root]].push_back(i);
  }
  return out;
}

}  // namespace detail

inline ReducedSpectrum reduced_spectrum(const FirstOrderSystem& sys) {
  const auto& grid = sys.grid();
  require(grid.dofs() <= kDenseLimit, "eigen path: size exceeds dense limit; use the contour path");
  ReducedSpectrum s;
  auto rb = range_eigenpairs(sys.D_symbol());
  s.Q = std::move(rb.Q);
  s.d = std::move(rb.eigenvalues);
  s.BQ = apply_pointwise(grid, sys.B().values(), s.Q);
  s.BR = s.Q.adjoint() * s.BQ;
  s.BR_lu.compute(s.BR);
  s.cond_BR = detail::condition_number(s.BR);
  const int r = static_cast<int>(s.Q.cols());
  Eigen::MatrixXcd TR = s.d.cast<cplx>().asDiagonal() * s.BR;

  s.V = Eigen::MatrixXcd::Zero(r, r);
  s.V_inv = Eigen::MatrixXcd::Zero(r, r);
  s.lambda.resize(r);
  const double scale = TR.cwiseAbs().maxCoeff();
  auto blocks = detail::coupling_blocks(TR, 1e-13 * scale);
  s.blocks = static_cast<int>(blocks.size());
  s.normal = true;
  double smax = 0.0, smin = std::numeric_limits<double>::infinity();
  for (const auto& idx : blocks) {
    const int b = static_cast<int>(idx.size());
    Eigen::MatrixXcd S(b, b);
    for (int i = 0; i < b; ++i)
      for (int j = 0; j < b; ++j) S(i, j) = TR(idx[i], idx[j]);
    Eigen::MatrixXcd Vb;
    Eigen::VectorXcd lb;
    const double comm = (S * S.adjoint() - S.adjoint() * S).norm();
    if (comm <= 1e-12 * S.squaredNorm()) {
      // Normal block: the Schur vectors are eigenvectors and stay orthonormal
      // under eigenvalue clustering.
      Eigen::ComplexSchur<Eigen::MatrixXcd> schur(S);
      Vb = schur.matrixU();
      lb = schur.matrixT().diagonal();
    } else {
      s.normal = false;
      Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(S);
      require(es.info() == Eigen::Success, "eigen path: eigensolver failed");
      Vb = es.eigenvectors();
      lb = es.eigenvalues();
    }
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(Vb);
    smax = std::max(smax, svd.singularValues()(0));
    smin = std::min(smin, svd.singularValues()(b - 1));
    Eigen::MatrixXcd Vb_inv = Vb.partialPivLu().inverse();
    for (int i = 0; i < b; ++i) {
      s.lambda(idx[i]) = lb(i);
      for (int j = 0; j < b; ++j) {
        s.V(idx[i], idx[j]) = Vb(i, j);
        s.V_inv(idx[i], idx[j]) = Vb_inv(i, j);
      }
    }
  }
  s.cond_V = smin > 0 ? smax / smin : std::numeric_limits<double>::infinity();
  if (s.cond_V > 1e8) {
    std::ostringstream os;
    os << "eigen path: eigenvector matrix condition number " << s.cond_V
       << " exceeds 1e8; use a Schur-blocked evaluation (contour path) instead";
    throw Error(os.str());
  }
  s.spectral_radius = r ? s.lambda.cwiseAbs().maxCoeff() : 0.0;
  require(r == 0 || s.lambda.cwiseAbs().minCoeff() > 1e-10 * s.spectral_radius,
          "eigen path: reduced operator is numerically singular");
  s.QV = s.Q * s.V;
  s.BQV = s.BQ * s.V;
  return s;
}

/// Functional calculus of DB and BD for one coefficient system.
class Calculus {
 public:
  explicit Calculus(std::shared_ptr<FirstOrderSystem> sys) : sys_(std::move(sys)) {
    require(static_cast<bool>(sys_), "calculus: null system");
    sys_->certify();
  }

  static Calculus from_coefficients(const CoefficientMatrix& A) {
    return Calculus(FirstOrderSystem::from_coefficients(A));
  }

  const FirstOrderSystem& system() const { return *sys_; }
  std::shared_ptr<FirstOrderSystem> system_ptr() const { return sys_; }
  const GridSpec& grid() const { return sys_->grid(); }
  const AccretivityReport& accretivity() const { return sys_->accretivity(); }

  const ReducedSpectrum& spectrum() const {
    std::call_once(spectrum_once_, [&] { spectrum_ = reduced_spectrum(*sys_); });
    return *spectrum_;
  }

  /// h in the eigenbasis of T: range coordinates and the null component.
  class Expansion {
   public:
    Field eval(const std::function<cplx(cplx)>& b, cplx at_zero) const {
      Eigen::VectorXcd y = coeff_;
      for (int i = 0; i < y.size(); ++i) y(i) *= b(spec_->lambda(i));
      const auto& M = T_ == OperatorKind::DB ? spec_->QV : spec_->BQV;
      Field out = Field::from_vector(null_.grid(), M * y);
      if (at_zero != 0.0) out += at_zero * null_;
      return out;
    }
    Field eval(const HolomorphicFunction& b) const { return eval(b.eval, b.at_zero); }
    const Field& null_part() const { return null_; }
    Field range_part() const { return eval([](cplx) { return cplx(1.0); }, 0.0); }
    const Eigen::VectorXcd& coefficients() const { return coeff_; }

   private:
    friend class Calculus;
    const ReducedSpectrum* spec_ = nullptr;
    OperatorKind T_ = OperatorKind::DB;
    Eigen::VectorXcd coeff_;
    Field null_;
  };

  Expansion expand(OperatorKind T, const Field& h) const {
    require(T == OperatorKind::DB || T == OperatorKind::BD, "calculus: T must be DB or BD");
    require(h.grid() == grid(), "calculus: grid mismatch");
    const auto& s = spectrum();
    Eigen::VectorXcd v = to_physical(h).vector();
    Eigen::VectorXcd c;
    Eigen::VectorXcd fn;
    if (T == OperatorKind::DB) {
      Eigen::VectorXcd Bh = sys_->apply_vector(OperatorKind::B, v);
      c = s.BR_lu.solve(s.Q.adjoint() * Bh);
      fn = v - s.Q * c;
    } else {
      c = s.BR_lu.solve(s.Q.adjoint() * v);
      fn = v - s.BQ * c;
    }
    Expansion e;
    e.spec_ = &s;
    e.T_ = T;
    e.coeff_ = s.V_inv * c;
    e.null_ = Field::from_vector(grid(), fn);
    return e;
  }

  Field eigen_apply(const HolomorphicFunction& b, OperatorKind T, const Field& h) const {
    return expand(T, h).eval(b);
  }

  /// Cauchy integral over the boundary of the double sector, each node one
  /// shifted solve. Non-decaying b must carry a rational splitting.
  Field contour_apply(const HolomorphicFunction& b, OperatorKind T, const Field& h,
                      std::optional<ContourSpec> contour = std::nullopt) const {
    require(T == OperatorKind::DB || T == OperatorKind::BD, "calculus: T must be DB or BD");
    if (!b.decays()) throw Error("contour requires Psi-class decay");
    const auto& psi = b.has_split() ? b.remainder : b.eval;
    ContourSpec cs = contour ? *contour : ContourSpec::for_function(b, accretivity().omega);
    const Eigen::VectorXcd v = to_physical(h).vector();
    const int n = static_cast<int>(v.size());
    const double nu = cs.nu;
    const cplx e_plus = std::polar(1.0, nu), e_minus = std::polar(1.0, -nu);
    // Rays: lambda = r e^{-i nu} and -r e^{i nu} traversed outward (+),
    // r e^{i nu} and -r e^{-i nu} inward (-).
    const std::array<cplx, 4> dir = {e_minus, -e_minus, e_plus, -e_plus};
    const std::array<double, 4> sign = {1.0, 1.0, -1.0, -1.0};

    const bool dense = grid().dofs() <= kDenseLimit;
    const auto* schur = dense ? &schur_of(T) : nullptr;
    Eigen::VectorXcd y;
    if (dense) y = schur->U.adjoint() * v;

    const int K = cs.size();
    const int workers = std::min(thread_count(), 4 * K);
    std::vector<Eigen::VectorXcd> acc(workers, Eigen::VectorXcd::Zero(n));
    parallel_for(4 * K, [&](int idx, int w) {
      const int ray = idx / K, j = idx % K;
      const cplx lam = cs.r[j] * dir[ray];
      const cplx weight = sign[ray] * cs.weight[j] * psi(lam) / cplx(0.0, 2.0 * std::numbers::pi);
      if (weight == 0.0) return;
      Eigen::VectorXcd u;
      if (dense) {
        // (I - T/lambda)^{-1} = U (I - S/lambda)^{-1} U*, back substitution
        const auto& S = schur->T;
        const cplx il = 1.0 / lam;
        u.resize(n);
        for (int i = n - 1; i >= 0; --i) {
          cplx acc_i = y(i);
          if (i + 1 < n) acc_i += il * S.row(i).segment(i + 1, n - i - 1).transpose().cwiseProduct(u.segment(i + 1, n - i - 1)).sum();
          u(i) = acc_i / (1.0 - il * S(i, i));
        }
      } else {
        u = shifted_solve(*sys_, T, 1.0, -1.0 / lam, Field::from_vector(grid(), v)).solution.vector();
      }
      acc[w] += weight * u;
    });
    Eigen::VectorXcd sum = Eigen::VectorXcd::Zero(n);
    for (const auto& a : acc) sum += a;
    if (dense) sum = schur->U * sum;
    Field out = Field::from_vector(grid(), sum);
    for (const auto& term : b.rational) {
      Field w = to_physical(h);
      for (int k = 0; k < term.k; ++k) w = resolvent_solve(*sys_, T, term.m, w).solution;
      out += term.coefficient * w;
    }
    return out;
  }

  Field apply(const HolomorphicFunction& b, OperatorKind T, const Field& h,
              CalculusPath path = CalculusPath::automatic) const {
    if (path == CalculusPath::automatic)
      path = grid().dofs() <= kDenseLimit ? CalculusPath::eigen : CalculusPath::contour;
    return path == CalculusPath::eigen ? eigen_apply(b, T, h) : contour_apply(b, T, h);
  }

  /// e^{-t|T|} h
  Field semigroup(OperatorKind T, double t, const Field& h) const {
    require(t >= 0.0, "semigroup: t must be nonnegative");
    return apply(exp_abs(t), T, h);
  }

  /// Projection onto the closure of the range of T along its null space.
  Field range_projection(OperatorKind T, const Field& h) const { return expand(T, h).range_part(); }

 private:
  struct SchurData {
    Eigen::MatrixXcd U, T;
  };

  const SchurData& schur_of(OperatorKind T) const {
    std::lock_guard lock(schur_mutex_);
    auto& slot = schur_[T == OperatorKind::DB ? 0 : 1];
    if (!slot) {
      Eigen::ComplexSchur<Eigen::MatrixXcd> cs(sys_->dense(T));
      slot = std::make_unique<SchurData>(SchurData{cs.matrixU(), cs.matrixT()});
    }
    return *slot;
  }

  std::shared_ptr<FirstOrderSystem> sys_;
  mutable std::once_flag spectrum_once_;
  mutable std::optional<ReducedSpectrum> spectrum_;
  mutable std::mutex schur_mutex_;
  mutable std::unique_ptr<SchurData> schur_[2];
};

inline Field apply_calculus(const Calculus& calc, const HolomorphicFunction& b, OperatorKind T, const Field& h,
                            CalculusPath path = CalculusPath::automatic) {
  return calc.apply(b, T, h, path);
}

inline Field semigroup(const Calculus& calc, OperatorKind T, double t, const Field& h) {
  return calc.semigroup(T, t, h);
}

}  // namespace halfspace
