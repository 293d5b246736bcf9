#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "halfspace/error.hpp"

namespace halfspace {

using cplx = std::complex<double>;
using Frequency = std::array<int, 2>;

/// Periodic grid on the torus [0, 2pi)^n carrying C^N-valued fields,
/// N = m (1 + n). Channel layout: the m scalar (perp) components first,
/// then the tangential components ordered (axis j, component alpha) at
/// index m + j m + alpha.
struct GridSpec {
  int n = 1;  // boundary dimension
  int G = 64; // points per axis
  int m = 1;  // system size

  GridSpec() = default;
  GridSpec(int dim, int points_per_axis, int system_size)
      : n(dim), G(points_per_axis), m(system_size) {
    validate();
  }

  void validate() const {
    require(n == 1 || n == 2, "grid: boundary dimension must be 1 or 2");
    require(G >= 8 && (G & (G - 1)) == 0, "grid: G must be a power of two >= 8");
    require(m >= 1, "grid: system size must be positive");
  }

  int channels() const { return m * (1 + n); }
  int points() const { return n == 1 ? G : G * G; }
  int dofs() const { return channels() * points(); }
  double spacing() const { return 2.0 * std::numbers::pi / G; }
  double cell_volume() const { return std::pow(spacing(), n); }
  double torus_volume() const { return std::pow(2.0 * std::numbers::pi, n); }

  int perp_channel(int alpha) const { return alpha; }
  int tangential_channel(int axis, int alpha) const { return m + axis * m + alpha; }

  /// Signed integer wavenumber for FFT index i in [0, G).
  int wavenumber(int i) const { return i < G / 2 ? i : i - G; }

  Frequency frequency(int p) const {
    if (n == 1) return {wavenumber(p), 0};
    return {wavenumber(p % G), wavenumber(p / G)};
  }

  /// Grid point coordinates of point index p (axis 0 varies fastest).
  std::array<double, 2> coordinates(int p) const {
    if (n == 1) return {p * spacing(), 0.0};
    return {(p % G) * spacing(), (p / G) * spacing()};
  }

  /// Periodic (torus) distance between two grid points.
  double distance(int p, int q) const {
    auto a = coordinates(p);
    auto b = coordinates(q);
    double s = 0.0;
    for (int j = 0; j < n; ++j) {
      double d = std::abs(a[j] - b[j]);
      d = std::min(d, 2.0 * std::numbers::pi - d);
      s += d * d;
    }
    return std::sqrt(s);
  }

  bool operator==(const GridSpec&) const = default;
};

inline double frequency_norm(const Frequency& k) {
  return std::hypot(static_cast<double>(k[0]), static_cast<double>(k[1]));
}

enum class Representation { physical, spectral };

/// C^N-valued function on the grid. values() is points x channels.
class Field {
 public:
  Field() = default;
  Field(GridSpec grid, Representation rep = Representation::physical)
      : grid_(grid), rep_(rep), values_(Eigen::MatrixXcd::Zero(grid.points(), grid.channels())) {}
  Field(GridSpec grid, Eigen::MatrixXcd values, Representation rep = Representation::physical)
      : grid_(grid), rep_(rep), values_(std::move(values)) {
    require(values_.rows() == grid_.points() && values_.cols() == grid_.channels(),
            "field: value array shape does not match grid");
  }

  const GridSpec& grid() const { return grid_; }
  Representation representation() const { return rep_; }
  bool is_physical() const { return rep_ == Representation::physical; }

  const Eigen::MatrixXcd& values() const { return values_; }
  Eigen::MatrixXcd& values() { return values_; }

  cplx& operator()(int point, int channel) { return values_(point, channel); }
  cplx operator()(int point, int channel) const { return values_(point, channel); }

  /// Flattened channel-major view: index channel * points + point.
  Eigen::VectorXcd vector() const {
    return Eigen::Map<const Eigen::VectorXcd>(values_.data(), values_.size());
  }
  static Field from_vector(const GridSpec& grid, const Eigen::VectorXcd& v,
                           Representation rep = Representation::physical) {
    require(v.size() == grid.dofs(), "field: vector length does not match grid");
    return Field(grid, Eigen::Map<const Eigen::MatrixXcd>(v.data(), grid.points(), grid.channels()),
                 rep);
  }

  bool all_finite() const { return values_.allFinite(); }

  Field& operator+=(const Field& o) { check_compatible(o); values_ += o.values_; return *this; }
  Field& operator-=(const Field& o) { check_compatible(o); values_ -= o.values_; return *this; }
  Field& operator*=(cplx s) { values_ *= s; return *this; }
  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(cplx s, Field a) { return a *= s; }
  friend Field operator*(Field a, cplx s) { return a *= s; }

 private:
  void check_compatible(const Field& o) const {
    require(grid_ == o.grid_ && rep_ == o.rep_, "field: incompatible operands");
  }

  GridSpec grid_;
  Representation rep_ = Representation::physical;
  Eigen::MatrixXcd values_;
};

namespace detail {

// Unitary DFT of one channel column, in place. forward uses e^{-ikx}.
inline void transform_column(const GridSpec& grid, Eigen::Ref<Eigen::VectorXcd> col, bool forward) {
  thread_local Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::Unscaled);
  const int G = grid.G;
  const double scale = 1.0 / std::sqrt(static_cast<double>(G));
  std::vector<cplx> in(G), out(G);
  auto run = [&](auto get, auto put) {
    for (int i = 0; i < G; ++i) in[i] = get(i);
    if (forward) fft.fwd(out, in); else fft.inv(out, in);
    for (int i = 0; i < G; ++i) put(i, out[i] * scale);
  };
  if (grid.n == 1) {
    run([&](int i) { return col(i); }, [&](int i, cplx v) { col(i) = v; });
    return;
  }
  for (int r = 0; r < G; ++r)  // along axis 0
    run([&](int i) { return col(r * G + i); }, [&](int i, cplx v) { col(r * G + i) = v; });
  for (int c = 0; c < G; ++c)  // along axis 1
    run([&](int i) { return col(i * G + c); }, [&](int i, cplx v) { col(i * G + c) = v; });
}

inline Field transform(const Field& f, bool forward) {
  require(f.all_finite(), "transform: field has non-finite entries");
  Field out(f.grid(), f.values(), forward ? Representation::spectral : Representation::physical);
  for (int c = 0; c < f.grid().channels(); ++c) transform_column(f.grid(), out.values().col(c), forward);
  return out;
}

}  // namespace detail

inline Field forward_transform(const Field& f) {
  require(f.is_physical(), "forward_transform: field is already spectral");
  return detail::transform(f, true);
}

inline Field inverse_transform(const Field& f) {
  require(!f.is_physical(), "inverse_transform: field is already physical");
  return detail::transform(f, false);
}

inline Field to_physical(const Field& f) { return f.is_physical() ? f : inverse_transform(f); }
inline Field to_spectral(const Field& f) { return f.is_physical() ? forward_transform(f) : f; }

/// Torus L^2 inner product <f, g> = sum conj(f) g * cell volume. Both
/// representations give the same value (unitary transform).
inline cplx inner(const Field& f, const Field& g) {
  require(f.grid() == g.grid(), "inner: grid mismatch");
  if (f.representation() != g.representation()) return inner(to_physical(f), to_physical(g));
  return (f.values().array().conjugate() * g.values().array()).sum() * f.grid().cell_volume();
}

inline double l2_norm(const Field& f) {
  return std::sqrt(f.values().squaredNorm() * f.grid().cell_volume());
}

/// Homogeneous Sobolev norm: l2 norm of |k|^s weighted spectral coefficients.
inline double sobolev_norm(const Field& f, double s) {
  if (s == 0.0) return l2_norm(f);
  Field fs = to_spectral(f);
  const auto& grid = f.grid();
  require(fs.values().row(0).norm() <= 1e-10 * fs.values().norm(),
          "sobolev_norm: nonzero mean in homogeneous norm");
  double acc = 0.0;
  for (int p = 1; p < grid.points(); ++p) {
    double w = std::pow(frequency_norm(grid.frequency(p)), 2.0 * s);
    acc += w * fs.values().row(p).squaredNorm();
  }
  return std::sqrt(acc * grid.cell_volume());
}

/// Removes the frequency-zero mode (per channel mean).
inline Field remove_mean(const Field& f) {
  Field g = to_physical(f);
  Eigen::RowVectorXcd mean = g.values().colwise().mean();
  g.values().rowwise() -= mean;
  return g;
}

/// Field built channel by channel from a function of the grid coordinates.
template <class Fn>
Field sample_field(const GridSpec& grid, Fn&& fn) {
  Field f(grid);
  for (int p = 0; p < grid.points(); ++p) {
    auto x = grid.coordinates(p);
    for (int c = 0; c < grid.channels(); ++c) f(p, c) = fn(x, c);
  }
  return f;
}

/// Plane wave e^{i k.x} times a constant channel vector.
inline Field plane_wave(const GridSpec& grid, const Frequency& k, const Eigen::VectorXcd& channels) {
  require(channels.size() == grid.channels(), "plane_wave: channel vector has wrong length");
  return sample_field(grid, [&](const std::array<double, 2>& x, int c) {
    return std::exp(cplx(0.0, k[0] * x[0] + k[1] * x[1])) * channels(c);
  });
}

/// Log-spaced t values with trapezoidal weights for the measure dt/t.
class TLadder {
 public:
  TLadder() = default;

  static TLadder log_spaced(double t_min, double t_max, int per_octave) {
    require(t_min > 0 && t_max > t_min && per_octave >= 1, "ladder: invalid range");
    TLadder l;
    const double octaves = std::log2(t_max / t_min);
    const int K = static_cast<int>(std::lround(octaves * per_octave)) + 1;
    const double h = std::log(t_max / t_min) / (K - 1);
    for (int j = 0; j < K; ++j) {
      l.t_.push_back(t_min * std::exp(h * j));
      l.w_.push_back((j == 0 || j == K - 1) ? 0.5 * h : h);
    }
    l.t_.back() = t_max;
    return l;
  }

  /// 2 points per octave over [2^-12, 2^8].
  static TLadder standard() { return log_spaced(std::ldexp(1.0, -12), std::ldexp(1.0, 8), 2); }

  int size() const { return static_cast<int>(t_.size()); }
  double t(int j) const { return t_[j]; }
  double weight(int j) const { return w_[j]; }
  const std::vector<double>& ts() const { return t_; }
  const std::vector<double>& weights() const { return w_; }
  double log_span() const { return std::log(t_.back() / t_.front()); }
  double weight_sum() const {
    double s = 0.0;
    for (double w : w_) s += w;
    return s;
  }

 private:
  std::vector<double> t_;
  std::vector<double> w_;
};

}  // namespace halfspace
