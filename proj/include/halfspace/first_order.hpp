#pragma once

#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/LU>

#include "halfspace/coefficients.hpp"
#include "halfspace/krylov.hpp"
#include "halfspace/parallel.hpp"

namespace halfspace {

enum class OperatorKind { D, P, B, DB, BD };

inline std::string to_string(OperatorKind k) {
  switch (k) {
    case OperatorKind::D: return "D";
    case OperatorKind::P: return "P";
    case OperatorKind::B: return "B";
    case OperatorKind::DB: return "DB";
    case OperatorKind::BD: return "BD";
  }
  return "?";
}

/// Largest problem assembled densely; beyond it resolvents are iterative.
inline constexpr int kDenseLimit = 8192;
inline constexpr int kCompressionLimit = 1024;

/// D, P and B on one grid together with the operators DB and BD.
/// Immutable after construction apart from internal read-only caches.
class FirstOrderSystem {
 public:
  explicit FirstOrderSystem(TransformedB B)
      : grid_(B.grid()), B_(std::move(B)), D_(build_D_symbol(grid_)), P_(build_P_symbol(grid_)),
        Dinv_(build_D_inverse_symbol(grid_)) {}

  static std::shared_ptr<FirstOrderSystem> from_coefficients(const CoefficientMatrix& A) {
    return std::make_shared<FirstOrderSystem>(hat_transform(A));
  }

  const GridSpec& grid() const { return grid_; }
  const TransformedB& B() const { return B_; }
  const MultiplierSymbol& D_symbol() const { return D_; }
  const MultiplierSymbol& P_symbol() const { return P_; }

  Field apply_D(const Field& f) const { return to_physical(D_.apply(f)); }
  Field apply_P(const Field& f) const { return to_physical(P_.apply(f)); }
  Field apply_D_inverse(const Field& f) const { return to_physical(Dinv_.apply(f)); }
  Field apply_B(const Field& f) const { return B_.apply(f); }

  Field apply(OperatorKind k, const Field& f) const {
    require(f.grid() == grid_, "apply: grid mismatch");
    require(f.all_finite(), "apply: field has non-finite entries");
    switch (k) {
      case OperatorKind::D: return apply_D(f);
      case OperatorKind::P: return apply_P(f);
      case OperatorKind::B: return apply_B(f);
      case OperatorKind::DB: return apply_D(apply_B(f));
      case OperatorKind::BD: return apply_B(apply_D(f));
    }
    throw Error("apply: unknown operator");
  }

  Eigen::VectorXcd apply_vector(OperatorKind k, const Eigen::VectorXcd& v) const {
    return apply(k, Field::from_vector(grid_, v)).vector();
  }

  /// Computes and stores the accretivity certificate: the dense compression
  /// up to kCompressionLimit dofs, the pointwise bound beyond.
  const AccretivityReport& certify() {
    std::lock_guard lock(mutex_);
    if (!accretivity_)
      accretivity_ = grid_.dofs() <= kCompressionLimit ? accretivity_estimate(B_, D_) : pointwise_accretivity(B_);
    return *accretivity_;
  }

  bool certified() const {
    std::lock_guard lock(mutex_);
    return accretivity_.has_value();
  }
  const AccretivityReport& accretivity() const {
    std::lock_guard lock(mutex_);
    require(accretivity_.has_value(), "no accretivity certificate; call certify() first");
    return *accretivity_;
  }

  /// Dense matrix of T in the channel-major physical basis.
  const Eigen::MatrixXcd& dense(OperatorKind k) const {
    require(grid_.dofs() <= kDenseLimit,
            "assemble_dense: size exceeds dense limit; use the contour path with iterative resolvents");
    std::lock_guard lock(mutex_);
    auto& slot = dense_[static_cast<int>(k)];
    if (!slot) {
      const int n = grid_.dofs();
      auto M = std::make_shared<Eigen::MatrixXcd>(n, n);
      Eigen::VectorXcd e = Eigen::VectorXcd::Zero(n);
      for (int j = 0; j < n; ++j) {
        e(j) = 1.0;
        M->col(j) = apply_vector(k, e);
        e(j) = 0.0;
      }
      slot = std::move(M);
    }
    return *slot;
  }

 private:
  GridSpec grid_;
  TransformedB B_;
  MultiplierSymbol D_, P_, Dinv_;
  mutable std::mutex mutex_;
  std::optional<AccretivityReport> accretivity_;
  mutable std::shared_ptr<Eigen::MatrixXcd> dense_[5];
};

inline Eigen::MatrixXcd assemble_dense(const FirstOrderSystem& sys, OperatorKind k) { return sys.dense(k); }

/// Tagged linear operator: D, P, B, DB, BD, a resolvent of DB/BD, or a
/// stored dense matrix.
class LinearOperatorHandle {
 public:
  enum class Tag { D, P, B, DB, BD, resolvent, dense };

  static LinearOperatorHandle of(std::shared_ptr<const FirstOrderSystem> sys, OperatorKind k) {
    LinearOperatorHandle h;
    h.sys_ = std::move(sys);
    h.kind_ = k;
    h.tag_ = static_cast<Tag>(static_cast<int>(k));
    return h;
  }
  static LinearOperatorHandle resolvent(std::shared_ptr<const FirstOrderSystem> sys, OperatorKind k, double t) {
    auto h = of(std::move(sys), k);
    h.tag_ = Tag::resolvent;
    h.t_ = t;
    return h;
  }
  static LinearOperatorHandle dense(std::shared_ptr<const FirstOrderSystem> sys, OperatorKind k) {
    auto h = of(std::move(sys), k);
    h.tag_ = Tag::dense;
    h.matrix_ = std::make_shared<Eigen::MatrixXcd>(h.sys_->dense(k));
    return h;
  }

  Tag tag() const { return tag_; }
  Field apply(const Field& f) const;

 private:
  std::shared_ptr<const FirstOrderSystem> sys_;
  OperatorKind kind_ = OperatorKind::D;
  Tag tag_ = Tag::D;
  double t_ = 0.0;
  std::shared_ptr<Eigen::MatrixXcd> matrix_;
};

struct SolveOptions {
  double tolerance = 1e-10;
  bool force_iterative = false;
  GmresOptions gmres;
};

struct SolveReport {
  Field solution;
  double relative_residual = 0.0;
  std::string method;
  std::vector<double> residual_history;
};

/// Solves (alpha I + beta T) u = f for T in {DB, BD}. Dense LU within the
/// dense limit, otherwise GMRES right-preconditioned by (alpha I + beta D)^{-1}.
inline SolveReport shifted_solve(const FirstOrderSystem& sys, OperatorKind T, cplx alpha, cplx beta,
                                 const Field& f, const SolveOptions& opt = {}) {
  require(T == OperatorKind::DB || T == OperatorKind::BD, "shifted_solve: T must be DB or BD");
  require(f.all_finite(), "resolvent_solve: field has non-finite entries");
  const auto& grid = sys.grid();
  Eigen::VectorXcd rhs = to_physical(f).vector();
  SolveReport rep;
  auto op = [&](const Eigen::VectorXcd& v) -> Eigen::VectorXcd {
    return alpha * v + beta * sys.apply_vector(T, v);
  };
  if (!opt.force_iterative && grid.dofs() <= kDenseLimit) {
    Eigen::MatrixXcd M = beta * sys.dense(T);
    M.diagonal().array() += alpha;
    Eigen::VectorXcd u = M.partialPivLu().solve(rhs);
    rep.solution = Field::from_vector(grid, u);
    rep.method = "dense LU";
  } else {
    std::vector<Eigen::MatrixXcd> pre(grid.points());
    for (int p = 0; p < grid.points(); ++p) {
      Eigen::MatrixXcd S = beta * sys.D_symbol().at(p);
      S.diagonal().array() += alpha;
      pre[p] = S.inverse();
    }
    MultiplierSymbol precond(grid, std::move(pre));
    auto M_inv = [&](const Eigen::VectorXcd& v) -> Eigen::VectorXcd {
      return to_physical(precond.apply(Field::from_vector(grid, v))).vector();
    };
    GmresOptions g = opt.gmres;
    g.tolerance = opt.tolerance;
    auto res = gmres(op, M_inv, rhs, g);
    rep.solution = Field::from_vector(grid, res.x);
    rep.residual_history = std::move(res.residual_history);
    rep.method = "GMRES(" + std::to_string(g.restart) + ") with D-resolvent preconditioner";
  }
  const double fn = rhs.norm();
  rep.relative_residual = fn > 0 ? (op(rep.solution.vector()) - rhs).norm() / fn : 0.0;
  return rep;
}

/// u = (I + i t T)^{-1} f. Requires an accretivity certificate.
inline SolveReport resolvent_solve(const FirstOrderSystem& sys, OperatorKind T, double t, const Field& f,
                                   const SolveOptions& opt = {}) {
  require(t != 0.0, "resolvent_solve: t must be nonzero");
  require(sys.certified() && sys.accretivity().kappa > 0.0,
          "resolvent_solve: accretivity certificate required");
  return shifted_solve(sys, T, 1.0, cplx(0.0, t), f, opt);
}

inline Field LinearOperatorHandle::apply(const Field& f) const {
  switch (tag_) {
    case Tag::resolvent: return resolvent_solve(*sys_, kind_, t_, f).solution;
    case Tag::dense: return Field::from_vector(sys_->grid(), (*matrix_) * to_physical(f).vector());
    default: return sys_->apply(kind_, f);
  }
}

/// Empirical off-diagonal decay of 1_E (I + i t T)^{-1} 1_F.
struct OffDiagonalReport {
  double distance = 0.0;              // torus distance between E and F
  std::vector<double> ts;
  std::vector<double> norms;          // operator norm estimate per t
  double exponent = 0.0;              // fitted N in <dist/t>^{-N}
  bool saturated = false;             // some t comparable to the period
  std::string method;
};

inline double set_distance(const GridSpec& grid, const std::vector<int>& E, const std::vector<int>& F) {
  double d = std::numeric_limits<double>::infinity();
  for (int p : E)
    for (int q : F) d = std::min(d, grid.distance(p, q));
  return d;
}

/// Operator norm of the E x F block of the resolvent (all channels). The
/// block is formed exactly (dense LU for small grids, one GMRES solve per
/// column otherwise) when F has at most `exact_columns` degrees of freedom;
/// beyond that it is the max over `trials` random probes.
inline double offdiag_norm(const FirstOrderSystem& sys, OperatorKind T, double t, const std::vector<int>& E,
                           const std::vector<int>& F, int trials, std::uint64_t seed = 7,
                           int exact_columns = 4096) {
  const auto& grid = sys.grid();
  const int P = grid.points(), N = grid.channels();
  std::vector<int> rows, cols;
  for (int c = 0; c < N; ++c) {
    for (int p : E) rows.push_back(c * P + p);
    for (int q : F) cols.push_back(c * P + q);
  }
  const int nc = static_cast<int>(cols.size());
  if (nc <= exact_columns) {
    Eigen::MatrixXcd block(rows.size(), nc);
    if (grid.dofs() <= 2048) {
      Eigen::MatrixXcd M = cplx(0.0, t) * sys.dense(T);
      M.diagonal().array() += 1.0;
      Eigen::MatrixXcd rhs = Eigen::MatrixXcd::Zero(grid.dofs(), nc);
      for (int j = 0; j < nc; ++j) rhs(cols[j], j) = 1.0;
      Eigen::MatrixXcd R = M.partialPivLu().solve(rhs);
      for (size_t i = 0; i < rows.size(); ++i) block.row(i) = R.row(rows[i]);
    } else {
      SolveOptions opt;
      opt.force_iterative = true;
      parallel_for(nc, [&](int j, int) {
        Eigen::VectorXcd e = Eigen::VectorXcd::Zero(grid.dofs());
        e(cols[j]) = 1.0;
        Eigen::VectorXcd u = resolvent_solve(sys, T, t, Field::from_vector(grid, e), opt).solution.vector();
        for (size_t i = 0; i < rows.size(); ++i) block(i, j) = u(rows[i]);
      });
    }
    return block.jacobiSvd().singularValues()(0);
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  double best = 0.0;
  for (int k = 0; k < trials; ++k) {
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(grid.dofs());
    for (int c : cols) v(c) = cplx(nd(rng), nd(rng));
    v /= v.norm();
    Field u = resolvent_solve(sys, T, t, Field::from_vector(grid, v)).solution;
    Eigen::VectorXcd uv = u.vector();
    double s = 0.0;
    for (int r : rows) s += std::norm(uv(r));
    best = std::max(best, std::sqrt(s));
  }
  return best;
}

/// Sweeps t, records the E x F resolvent block norm, and fits the decay
/// exponent N of norm ~ <dist/t>^{-N} by least squares in log-log form.
inline OffDiagonalReport offdiag_probe(const FirstOrderSystem& sys, OperatorKind T, const std::vector<double>& ts,
                                       const std::vector<int>& E, const std::vector<int>& F, int trials = 16) {
  require(sys.certified(), "offdiag_probe: accretivity certificate required");
  OffDiagonalReport rep;
  const auto& grid = sys.grid();
  rep.distance = set_distance(grid, E, F);
  rep.method = "resolvent block SVD (dense LU or per-column GMRES), random probes for wide F";
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (double t : ts) {
    double nrm = offdiag_norm(sys, T, t, E, F, trials);
    rep.ts.push_back(t);
    rep.norms.push_back(nrm);
    if (std::abs(t) >= 2.0 * std::numbers::pi) rep.saturated = true;
    const double x = std::log(1.0 + rep.distance / std::abs(t));
    const double y = std::log(std::max(nrm, 1e-300));
    sx += x; sy += y; sxx += x * x; sxy += x * y;
  }
  const double K = static_cast<double>(ts.size());
  if (ts.size() >= 2 && rep.distance > 0) {
    const double slope = (K * sxy - sx * sy) / (K * sxx - sx * sx);
    rep.exponent = -slope;
  }
  return rep;
}

}  // namespace halfspace
