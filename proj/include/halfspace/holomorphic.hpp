#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "halfspace/grid_field.hpp"

namespace halfspace {

/// [z] = z sgn(Re z); the branch that is positive on both half-sectors.
inline cplx bracket(cplx z) { return z.real() >= 0.0 ? z : -z; }

/// c (1 + i m z)^{-k}
struct RationalTerm {
  cplx coefficient = 1.0;
  double m = 1.0;
  int k = 1;
  cplx operator()(cplx z) const { return coefficient * std::pow(1.0 + cplx(0.0, m) * z, -k); }
};

/// A bounded holomorphic function on a double sector, with the data the
/// calculus needs: value on the null space and decay exponents
/// |b(z)| <= C min(|z|^sigma, |z|^-tau). sigma = tau = 0 means no decay.
struct HolomorphicFunction {
  std::string name;
  std::function<cplx(cplx)> eval;
  double sigma = 0.0;
  double tau = 0.0;
  cplx at_zero = 0.0;
  /// Optional splitting b = remainder + sum of rational terms, remainder
  /// decaying with (sigma, tau) above.
  std::function<cplx(cplx)> remainder;
  std::vector<RationalTerm> rational;

  cplx operator()(cplx z) const { return eval(z); }
  bool decays() const { return sigma > 0.0 && tau > 0.0; }
  bool has_split() const { return static_cast<bool>(remainder); }
};

inline HolomorphicFunction custom(std::string name, double sigma, double tau, std::function<cplx(cplx)> fn,
                                  cplx at_zero = 0.0) {
  return {std::move(name), std::move(fn), sigma, tau, at_zero, {}, {}};
}

inline HolomorphicFunction constant_function(cplx c) {
  return custom("constant", 0, 0, [c](cplx) { return c; }, c);
}

inline HolomorphicFunction chi_plus() {
  return custom("chi_plus", 0, 0, [](cplx z) { return cplx(z.real() > 0.0 ? 1.0 : 0.0); });
}

inline HolomorphicFunction chi_minus() {
  return custom("chi_minus", 0, 0, [](cplx z) { return cplx(z.real() < 0.0 ? 1.0 : 0.0); });
}

inline HolomorphicFunction sgn() {
  return custom("sgn", 0, 0, [](cplx z) { return cplx(z.real() > 0.0 ? 1.0 : (z.real() < 0.0 ? -1.0 : 0.0)); });
}

/// e^{-t[z]}, the semigroup e^{-t|T|}.
inline HolomorphicFunction exp_abs(double t) {
  return custom("exp_abs(" + std::to_string(t) + ")", 0, 0, [t](cplx z) { return std::exp(-t * bracket(z)); },
                1.0);
}

/// t z e^{-t[z]}
inline HolomorphicFunction z_exp_abs(double t) {
  return custom("z_exp_abs(" + std::to_string(t) + ")", 1, 4,
                [t](cplx z) { return t * z * std::exp(-t * bracket(z)); });
}

/// [z] e^{-[z]}
inline HolomorphicFunction bracket_exp() {
  return custom("bracket_exp", 1, 4, [](cplx z) {
    cplx w = bracket(z);
    return w * std::exp(-w);
  });
}

/// t z (1 + i t z)^{-M}, M >= 2.
inline HolomorphicFunction resolvent_power(int M, double t = 1.0) {
  return custom("resolvent_power(" + std::to_string(M) + ")", 1, M - 1,
                [M, t](cplx z) { return t * z * std::pow(1.0 + cplx(0.0, t) * z, -M); });
}

/// e^{-[z] - 1/[z]}
inline HolomorphicFunction theta() {
  return custom("theta", 4, 4, [](cplx z) {
    if (z == 0.0) return cplx(0.0);
    cplx w = bracket(z);
    return std::exp(-w - 1.0 / w);
  });
}

/// p(z) / q(z) with coefficients in increasing degree.
inline HolomorphicFunction rational(std::vector<cplx> p, std::vector<cplx> q) {
  require(!q.empty() && q[0] != 0.0, "rational: denominator must not vanish at 0");
  auto horner = [](const std::vector<cplx>& c, cplx z) {
    cplx s = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) s = s * z + *it;
    return s;
  };
  int low = 0;
  while (low < static_cast<int>(p.size()) && p[low] == 0.0) ++low;
  int dp = static_cast<int>(p.size()) - 1, dq = static_cast<int>(q.size()) - 1;
  while (dp >= 0 && p[dp] == 0.0) --dp;
  while (dq > 0 && q[dq] == 0.0) --dq;
  const double sigma = low, tau = dq - dp;
  const cplx at0 = p.empty() ? cplx(0.0) : p[0] / q[0];
  return custom("rational", sigma, tau, [p, q, horner](cplx z) { return horner(p, z) / horner(q, z); }, at0);
}

/// z / (1 + z^2)
inline HolomorphicFunction psi_quadratic() { return rational({0.0, 1.0}, {1.0, 0.0, 1.0}); }

inline HolomorphicFunction product(const HolomorphicFunction& f, const HolomorphicFunction& g) {
  auto fe = f.eval, ge = g.eval;
  return custom(f.name + "*" + g.name, f.sigma + g.sigma, f.tau + g.tau,
                [fe, ge](cplx z) { return fe(z) * ge(z); }, f.at_zero * g.at_zero);
}

/// z -> f(s z)
inline HolomorphicFunction dilate(const HolomorphicFunction& f, double s) {
  auto fe = f.eval;
  HolomorphicFunction out = f;
  out.name = f.name + "(" + std::to_string(s) + "z)";
  out.eval = [fe, s](cplx z) { return fe(s * z); };
  if (f.remainder) {
    auto r = f.remainder;
    out.remainder = [r, s](cplx z) { return r(s * z); };
  }
  for (auto& term : out.rational) term.m *= s;
  return out;
}

/// Smallest C with |f(z)| <= C min(|z|^sigma, |z|^-tau), estimated on
/// log-spaced samples of the four rays at angle nu.
inline double decay_constant(const std::function<cplx(cplx)>& f, double sigma, double tau, double nu,
                             int samples = 2000) {
  double C = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double r = std::pow(10.0, -12.0 + 24.0 * i / (samples - 1));
    const double bound = std::min(std::pow(r, sigma), std::pow(r, -tau));
    for (double a : {nu, -nu, std::numbers::pi - nu, std::numbers::pi + nu})
      C = std::max(C, std::abs(f(std::polar(r, a))) / bound);
  }
  return C;
}

/// Quadrature contour on the boundary of the double sector of angle nu:
/// trapezoid in s = log r on [log r_min, log r_max].
struct ContourSpec {
  double nu = 0.0;
  double r_min = 0.0, r_max = 0.0;
  int nodes_per_decade = 64;
  std::vector<double> r;       // radii
  std::vector<double> weight;  // ds weights

  static ContourSpec build(double nu, double r_min, double r_max, int per_decade = 64) {
    require(nu > 0 && nu < std::numbers::pi / 2, "contour: angle must lie in (0, pi/2)");
    require(r_min > 0 && r_max > r_min, "contour: invalid truncation radii");
    ContourSpec c;
    c.nu = nu;
    c.r_min = r_min;
    c.r_max = r_max;
    c.nodes_per_decade = per_decade;
    const double a = std::log(r_min), b = std::log(r_max);
    const int K = std::max(2, static_cast<int>(std::ceil((b - a) / std::log(10.0) * per_decade)) + 1);
    const double h = (b - a) / (K - 1);
    for (int j = 0; j < K; ++j) {
      c.r.push_back(std::exp(a + h * j));
      c.weight.push_back((j == 0 || j == K - 1) ? 0.5 * h : h);
    }
    return c;
  }

  /// Angle nu = omega + 0.6 (pi/2 - omega) and radii chosen from the decay
  /// class so that each neglected tail is below eps.
  static ContourSpec for_function(const HolomorphicFunction& f, double omega, double eps = 1e-10,
                                  int per_decade = 64) {
    require(f.decays(), "contour requires Psi-class decay");
    const double nu = omega + 0.6 * (std::numbers::pi / 2 - omega);
    const auto& g = f.has_split() ? f.remainder : f.eval;
    const double C = std::max(1e-300, decay_constant(g, f.sigma, f.tau, nu));
    const double rmin = std::pow(eps * f.sigma / C, 1.0 / f.sigma);
    const double rmax = std::pow(C / (eps * f.tau), 1.0 / f.tau);
    return build(nu, rmin, rmax, per_decade);
  }

  int size() const { return static_cast<int>(r.size()); }

  /// Sum of weights approximating the integral of dlambda/lambda = ds along one ray.
  double log_length() const {
    double s = 0.0;
    for (double w : weight) s += w;
    return s;
  }
};

/// phi = c_pm conj(psi(conj z)) theta(z) with c_pm normalising
/// int_0^inf phi(+-t) psi(+-t) dt/t = 1.
struct CalderonPair {
  HolomorphicFunction phi;
  double c_plus = 0.0, c_minus = 0.0;
};

namespace detail {

// int_0^inf g(t) dt/t by the trapezoid rule in log t; g is assumed to
// decay at least like theta at both ends.
inline double log_trapezoid(const std::function<double(double)>& g, double lo = -40.0, double hi = 40.0,
                            double h = 0.01) {
  const int K = static_cast<int>(std::ceil((hi - lo) / h));
  double s = 0.0;
  for (int j = 0; j <= K; ++j) {
    const double v = g(std::exp(lo + h * j));
    s += (j == 0 || j == K) ? 0.5 * v : v;
  }
  return s * h;
}

}  // namespace detail

inline CalderonPair calderon_pair(const HolomorphicFunction& psi) {
  const auto th = theta();
  auto integral = [&](double sign) {
    return detail::log_trapezoid([&](double t) {
      const cplx z(sign * t, 0.0);
      return std::norm(psi(z)) * th(z).real();
    });
  };
  const double Ip = integral(1.0), Im = integral(-1.0);
  require(Ip > 1e-300 && Im > 1e-300, "degenerate psi");
  CalderonPair out;
  out.c_plus = 1.0 / Ip;
  out.c_minus = 1.0 / Im;
  auto pe = psi.eval;
  const double cp = out.c_plus, cm = out.c_minus;
  out.phi = custom("calderon(" + psi.name + ")", psi.sigma + 4, psi.tau + 4, [pe, cp, cm](cplx z) {
    if (z == 0.0) return cplx(0.0);
    const cplx w = bracket(z);
    return (z.real() >= 0 ? cp : cm) * std::conj(pe(std::conj(z))) * std::exp(-w - 1.0 / w);
  });
  return out;
}

}  // namespace halfspace
