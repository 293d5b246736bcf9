#pragma once

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <sys/utsname.h>

#include <json.hpp>

#include "halfspace/random.hpp"
#include "halfspace/tent.hpp"

namespace halfspace::harness {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Coefficient files
//
// samples: one text line
//     halfspace-samples n=<n> m=<m> G=<G>\n
// followed by P * N * N complex entries, P = G^n points in grid order
// (axis 0 fastest), each N x N matrix row-major, each entry two
// little-endian IEEE float64 (re, im). N = m (1 + n).
//
// fourier: a JSON document
//     {"format": "fourier", "n": 1, "m": 1,
//      "terms": [{"k": [k0] or [k0, k1], "matrix": [[[re, im], ...], ...]}]}
// giving A(x) = sum_k C_k exp(i k.x), sampled on the grid.
// ---------------------------------------------------------------------------

inline constexpr const char* kSamplesMagic = "halfspace-samples";

inline void check_a_block(const CoefficientMatrix& A) {
  for (int p = 0; p < A.grid().points(); ++p) {
    Eigen::VectorXd sv = A.a(p).jacobiSvd().singularValues();
    if (!(sv(sv.size() - 1) > 1e-12 * std::max(1.0, sv(0))))
      throw Error("coefficients: a-block not invertible at grid point " + std::to_string(p));
  }
}

inline void save_samples(const std::string& path, const CoefficientMatrix& A) {
  static_assert(std::endian::native == std::endian::little, "sample files are little-endian");
  const auto& g = A.grid();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path + " for writing");
  os << kSamplesMagic << " n=" << g.n << " m=" << g.m << " G=" << g.G << "\n";
  const int N = g.channels();
  for (int p = 0; p < g.points(); ++p)
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) {
        const double re = A.at(p)(i, j).real(), im = A.at(p)(i, j).imag();
        os.write(reinterpret_cast<const char*>(&re), 8);
        os.write(reinterpret_cast<const char*>(&im), 8);
      }
}

inline CoefficientMatrix parse_samples(const std::string& bytes) {
  const auto nl = bytes.find('\n');
  if (nl == std::string::npos) throw Error("samples: missing header line");
  std::istringstream hs(bytes.substr(0, nl));
  std::string magic;
  hs >> magic;
  if (magic != kSamplesMagic) throw Error("samples: bad magic '" + magic + "'");
  std::map<std::string, int> kv;
  std::string tok;
  while (hs >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw Error("samples: malformed header token '" + tok + "'");
    kv[tok.substr(0, eq)] = std::stoi(tok.substr(eq + 1));
  }
  if (!kv.count("n") || !kv.count("m") || !kv.count("G")) throw Error("samples: header must name n, m and G");
  GridSpec g(kv["n"], kv["G"], kv["m"]);
  const int N = g.channels();
  const std::size_t expected = static_cast<std::size_t>(g.points()) * N * N * 16;
  const std::size_t have = bytes.size() - nl - 1;
  if (have != expected)
    throw Error("samples: shape mismatch, expected " + std::to_string(expected) + " payload bytes, found " +
                std::to_string(have));
  const char* data = bytes.data() + nl + 1;
  PointwiseMatrices v(g.points(), Eigen::MatrixXcd(N, N));
  for (int p = 0; p < g.points(); ++p)
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) {
        double re, im;
        std::memcpy(&re, data, 8);
        std::memcpy(&im, data + 8, 8);
        data += 16;
        if (!std::isfinite(re) || !std::isfinite(im))
          throw Error("samples: non-finite entry at point " + std::to_string(p));
        v[p](i, j) = {re, im};
      }
  CoefficientMatrix A(g, std::move(v));
  check_a_block(A);
  return A;
}

inline Eigen::MatrixXcd matrix_from_json(const json& j, int N) {
  if (!j.is_array() || static_cast<int>(j.size()) != N) throw Error("matrix: expected " + std::to_string(N) + " rows");
  Eigen::MatrixXcd M(N, N);
  for (int i = 0; i < N; ++i) {
    if (!j[i].is_array() || static_cast<int>(j[i].size()) != N)
      throw Error("matrix: row " + std::to_string(i) + " must have " + std::to_string(N) + " entries");
    for (int k = 0; k < N; ++k) {
      const auto& e = j[i][k];
      double re, im = 0.0;
      if (e.is_number()) {
        re = e.get<double>();
      } else if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number()) {
        re = e[0].get<double>();
        im = e[1].get<double>();
      } else {
        throw Error("matrix: entries are numbers or [re, im] pairs");
      }
      if (!std::isfinite(re) || !std::isfinite(im)) throw Error("matrix: non-finite entry");
      M(i, k) = {re, im};
    }
  }
  return M;
}

inline json matrix_to_json(const Eigen::MatrixXcd& M) {
  json rows = json::array();
  for (int i = 0; i < M.rows(); ++i) {
    json r = json::array();
    for (int k = 0; k < M.cols(); ++k) r.push_back({M(i, k).real(), M(i, k).imag()});
    rows.push_back(r);
  }
  return rows;
}

/// Samples sum_k C_k e^{ik.x}; every |k_j| must be below G/2.
inline CoefficientMatrix fourier_coefficients(const GridSpec& grid, const json& terms) {
  if (!terms.is_array()) throw Error("fourier: 'terms' must be a list");
  const int N = grid.channels();
  PointwiseMatrices v(grid.points(), Eigen::MatrixXcd::Zero(N, N));
  for (const auto& t : terms) {
    if (!t.contains("k") || !t.contains("matrix")) throw Error("fourier: each term needs 'k' and 'matrix'");
    const auto& k = t["k"];
    if (!k.is_array() || static_cast<int>(k.size()) != grid.n)
      throw Error("fourier: frequency must have " + std::to_string(grid.n) + " components");
    std::array<int, 2> kk{0, 0};
    for (int j = 0; j < grid.n; ++j) {
      kk[j] = k[j].get<int>();
      if (2 * std::abs(kk[j]) >= grid.G) throw Error("fourier: frequency not resolved by the grid");
    }
    const Eigen::MatrixXcd C = matrix_from_json(t["matrix"], N);
    for (int p = 0; p < grid.points(); ++p) {
      auto x = grid.coordinates(p);
      v[p] += std::exp(cplx(0.0, kk[0] * x[0] + kk[1] * x[1])) * C;
    }
  }
  CoefficientMatrix A(grid, std::move(v));
  check_a_block(A);
  return A;
}

/// Reads a samples or fourier file. A fourier file is sampled on `grid`;
/// a samples file must match it when given.
inline CoefficientMatrix load_coefficients(const std::string& path, std::optional<GridSpec> grid = std::nullopt) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open coefficient file " + path);
  std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (bytes.rfind(kSamplesMagic, 0) == 0) {
    auto A = parse_samples(bytes);
    if (grid && !(A.grid() == *grid)) throw Error("samples: shape mismatch with the configured grid");
    return A;
  }
  json doc;
  try {
    doc = json::parse(bytes);
  } catch (const json::parse_error& e) {
    throw Error(path + ": " + e.what());
  }
  if (doc.value("format", "") != "fourier") throw Error(path + ": unknown coefficient format");
  const int n = doc.at("n").get<int>(), m = doc.at("m").get<int>();
  GridSpec g = grid ? *grid : GridSpec(n, 64, m);
  if (g.n != n || g.m != m) throw Error("fourier: shape mismatch with the configured grid");
  return fourier_coefficients(g, doc.at("terms"));
}

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

struct CoefficientSource {
  std::string kind = "identity";  // identity | random | block-random | constant | fourier | file
  double size = 0.1;
  int band = 2;
  bool hermitian = false;
  json matrix;                    // constant
  json terms;                     // fourier
  std::string path;               // file

  json to_json() const {
    json j = {{"kind", kind}};
    if (kind == "random" || kind == "block-random") {
      j["size"] = size;
      j["band"] = band;
      if (kind == "random") j["hermitian"] = hermitian;
    }
    if (kind == "constant") j["matrix"] = matrix;
    if (kind == "fourier") j["terms"] = terms;
    if (kind == "file") j["path"] = path;
    return j;
  }
};

struct LadderSpec {
  double t_min = std::ldexp(1.0, -16);
  double t_max = std::ldexp(1.0, 7);
  int per_octave = 8;

  TLadder build() const { return TLadder::log_spaced(t_min, t_max, per_octave); }
};

struct ExperimentConfig {
  GridSpec grid{1, 64, 1};
  CoefficientSource coefficients;
  LadderSpec ladder;
  WhitneyParams whitney;
  std::string experiment = "accretivity";
  std::string variant;
  std::string output = "report.json";
  std::uint64_t seed = 1;
  int samples = 5;
  double tolerance_scale = 1.0;

  json to_json() const {
    return {{"experiment", experiment},
            {"variant", variant},
            {"grid", {{"n", grid.n}, {"G", grid.G}, {"m", grid.m}}},
            {"coefficients", coefficients.to_json()},
            {"ladder", {{"t_min", ladder.t_min}, {"t_max", ladder.t_max}, {"per_octave", ladder.per_octave}}},
            {"whitney", {{"c0", whitney.c0}, {"c1", whitney.c1}, {"aperture", whitney.aperture}}},
            {"output", output},
            {"seed", seed},
            {"samples", samples},
            {"tolerance_scale", tolerance_scale}};
  }

  static ExperimentConfig from_json(const json& j);
  static ExperimentConfig parse(const std::string& text, const std::string& origin = "config");
  static ExperimentConfig load(const std::string& path);
};

namespace detail {

inline void reject_unknown(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw Error(where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : keys) ok = ok || it.key() == k;
    if (!ok) throw Error(where + ": unknown key '" + it.key() + "'");
  }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(where + "." + key + ": " + e.what());
  }
}

inline std::pair<int, int> line_column(const std::string& text, std::size_t byte) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace detail

inline ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig c;
  detail::reject_unknown(j, "config", {"experiment", "variant", "grid", "coefficients", "ladder", "whitney", "output",
                                       "seed", "samples", "tolerance_scale"});
  detail::read(j, "experiment", c.experiment, "config");
  detail::read(j, "variant", c.variant, "config");
  detail::read(j, "output", c.output, "config");
  detail::read(j, "seed", c.seed, "config");
  detail::read(j, "samples", c.samples, "config");
  detail::read(j, "tolerance_scale", c.tolerance_scale, "config");
  if (j.contains("grid")) {
    const auto& g = j["grid"];
    detail::reject_unknown(g, "config.grid", {"n", "G", "m"});
    int n = c.grid.n, G = c.grid.G, m = c.grid.m;
    detail::read(g, "n", n, "config.grid");
    detail::read(g, "G", G, "config.grid");
    detail::read(g, "m", m, "config.grid");
    c.grid = GridSpec(n, G, m);
  }
  if (j.contains("coefficients")) {
    const auto& s = j["coefficients"];
    detail::reject_unknown(s, "config.coefficients", {"kind", "size", "band", "hermitian", "matrix", "terms", "path"});
    auto& cs = c.coefficients;
    detail::read(s, "kind", cs.kind, "config.coefficients");
    detail::read(s, "size", cs.size, "config.coefficients");
    detail::read(s, "band", cs.band, "config.coefficients");
    detail::read(s, "hermitian", cs.hermitian, "config.coefficients");
    detail::read(s, "path", cs.path, "config.coefficients");
    if (s.contains("matrix")) cs.matrix = s["matrix"];
    if (s.contains("terms")) cs.terms = s["terms"];
  }
  if (j.contains("ladder")) {
    const auto& l = j["ladder"];
    detail::reject_unknown(l, "config.ladder", {"t_min", "t_max", "per_octave"});
    detail::read(l, "t_min", c.ladder.t_min, "config.ladder");
    detail::read(l, "t_max", c.ladder.t_max, "config.ladder");
    detail::read(l, "per_octave", c.ladder.per_octave, "config.ladder");
    c.ladder.build();
  }
  if (j.contains("whitney")) {
    const auto& w = j["whitney"];
    detail::reject_unknown(w, "config.whitney", {"c0", "c1", "aperture"});
    detail::read(w, "c0", c.whitney.c0, "config.whitney");
    detail::read(w, "c1", c.whitney.c1, "config.whitney");
    detail::read(w, "aperture", c.whitney.aperture, "config.whitney");
    c.whitney.validate();
  }
  require(c.samples >= 1, "config.samples must be positive");
  require(c.tolerance_scale > 0.0, "config.tolerance_scale must be positive");
  return c;
}

inline ExperimentConfig ExperimentConfig::parse(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    auto [line, col] = detail::line_column(text, e.byte == 0 ? 0 : e.byte - 1);
    throw Error(origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what());
  }
  try {
    return from_json(j);
  } catch (const Error& e) {
    throw Error(origin + ": " + e.what());
  }
}

inline ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open config " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse(ss.str(), path);
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

struct CheckRecord {
  std::string name;
  std::string operation;  // library entry point exercised
  std::string identity;   // the relation being checked
  double value = 0.0;
  double bound = 0.0;     // upper bound (or the range top when lower is set)
  std::optional<double> lower;
  bool pass = false;

  json to_json() const {
    json j = {{"name", name}, {"operation", operation}, {"identity", identity},
              {"value", value}, {"bound", bound},       {"pass", pass}};
    if (lower) j["lower"] = *lower;
    return j;
  }
};

inline json environment_fingerprint() {
  json env;
#if defined(__clang__)
  env["compiler"] = std::string("clang ") + __clang_version__;
#elif defined(__GNUC__)
  env["compiler"] = std::string("gcc ") + __VERSION__;
#endif
  env["cplusplus"] = __cplusplus;
  env["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                 std::to_string(EIGEN_MINOR_VERSION);
  env["threads"] = thread_count();
  utsname u{};
  if (uname(&u) == 0) env["system"] = std::string(u.sysname) + " " + u.release + " " + u.machine;
  return env;
}

struct Report {
  std::string experiment;
  std::string variant;
  json config;
  std::vector<CheckRecord> checks;
  json data = json::object();  // auxiliary series, not checked
  json environment;
  std::string error;           // set when the experiment aborted

  bool passed() const {
    if (!error.empty() || checks.empty()) return false;
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }

  json to_json() const {
    json cs = json::array();
    for (const auto& c : checks) cs.push_back(c.to_json());
    json j = {{"experiment", experiment}, {"variant", variant}, {"config", config},
              {"checks", cs},             {"data", data},       {"passed", passed()},
              {"environment", environment}};
    if (!error.empty()) j["error"] = error;
    return j;
  }

  /// Writes to a sibling temporary file and renames it into place.
  void write(const std::string& path) const {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
      std::ofstream os(tmp);
      if (!os) throw Error("cannot write report to " + tmp.string());
      os << to_json().dump(2) << "\n";
      if (!os) throw Error("failed writing report " + tmp.string());
    }
    fs::rename(tmp, target);
  }
};

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

inline CoefficientMatrix build_coefficients(const ExperimentConfig& cfg, Rng& rng) {
  const auto& s = cfg.coefficients;
  const auto& g = cfg.grid;
  CoefficientMatrix A;
  if (s.kind == "identity") {
    A = CoefficientMatrix::identity(g);
  } else if (s.kind == "random") {
    A = random_accretive(g, rng, s.size, s.band, s.hermitian);
  } else if (s.kind == "block-random") {
    A = random_block_diagonal(g, rng, s.size, s.band);
  } else if (s.kind == "constant") {
    A = CoefficientMatrix::constant(g, matrix_from_json(s.matrix, g.channels()));
  } else if (s.kind == "fourier") {
    A = fourier_coefficients(g, s.terms);
  } else if (s.kind == "file") {
    A = load_coefficients(s.path, g);
  } else {
    throw Error("unknown coefficient kind '" + s.kind + "'");
  }
  check_a_block(A);
  return A;
}

class Runner {
 public:
  explicit Runner(ExperimentConfig cfg) : cfg_(std::move(cfg)), rng_(cfg_.seed) {
    report_.experiment = cfg_.experiment;
    report_.variant = cfg_.variant;
    report_.config = cfg_.to_json();
  }

  Report run() {
    report_.environment = environment_fingerprint();
    try {
      dispatch();
    } catch (const std::exception& e) {
      report_.error = e.what();
    }
    return report_;
  }

 private:
  double tol(double base) const { return base * cfg_.tolerance_scale; }

  void check_le(std::string name, std::string op, std::string identity, double value, double bound) {
    report_.checks.push_back({std::move(name), std::move(op), std::move(identity), value, bound, std::nullopt,
                              std::isfinite(value) && value <= bound});
  }

  void check_in(std::string name, std::string op, std::string identity, double value, double lo, double hi) {
    report_.checks.push_back(
        {std::move(name), std::move(op), std::move(identity), value, hi, lo, std::isfinite(value) && value >= lo && value <= hi});
  }

  void need_variant(std::initializer_list<const char*> allowed) {
    for (const char* a : allowed)
      if (cfg_.variant == a) return;
    std::string msg = cfg_.experiment + ": variant must be one of";
    for (const char* a : allowed) msg += std::string(" ") + a;
    throw Error(msg);
  }

  CoefficientMatrix coefficients() { return build_coefficients(cfg_, rng_); }

  void dispatch() {
    const auto& e = cfg_.experiment;
    if (e == "accretivity") return accretivity();
    if (e == "quadratic") return quadratic();
    if (e == "calderon") return calderon();
    if (e == "nt-max") return nt_max();
    if (e == "nt-sharp") return nt_sharp_run();
    if (e == "bvp") return bvp();
    if (e == "layers") return layers();
    if (e == "oracle") return oracle();
    if (e == "sweep") return sweep();
    if (e == "calculus") return calculus();
    if (e == "offdiag") return offdiag();
    throw Error("unknown experiment '" + e + "'");
  }

  void accretivity() {
    auto A = coefficients();
    auto sys = FirstOrderSystem::from_coefficients(A);
    const auto& rep = sys->certify();
    report_.data["kappa"] = rep.kappa;
    report_.data["omega"] = rep.omega;
    report_.data["sup_norm"] = rep.sup_norm;
    report_.data["pointwise_accretive"] = rep.pointwise_accretive;
    report_.data["pointwise_kappa"] = rep.pointwise_kappa;
    report_.data["method"] = rep.method;
    check_in("kappa positive", "accretivity_estimate", "Re<u, Bu> >= kappa |u|^2 on range(D)", rep.kappa, 1e-300,
             std::numeric_limits<double>::max());
    // Random range vectors stay inside the certified sector.
    double worst_re = -std::numeric_limits<double>::infinity(), worst_arg = 0.0;
    const int probes = std::max(cfg_.samples, 100);
    for (int i = 0; i < probes; ++i) {
      Field u = random_range_field(cfg_.grid, rng_);
      const cplx q = inner(u, sys->apply_B(u));
      const double nu = l2_norm(u);
      worst_re = std::max(worst_re, rep.kappa - q.real() / (nu * nu));
      worst_arg = std::max(worst_arg, std::abs(std::arg(q)) - rep.omega);
    }
    check_le("kappa lower bound on probes", "accretivity_estimate", "kappa - Re<u,Bu>/|u|^2 <= 0", worst_re,
             tol(1e-9) * std::max(1.0, rep.sup_norm));
    check_le("sector on probes", "accretivity_estimate", "|arg<u,Bu>| - omega <= 0", worst_arg, tol(1e-9));
  }

  void quadratic() {
    auto A = coefficients();
    Calculus calc(FirstOrderSystem::from_coefficients(A));
    const auto ladder = cfg_.ladder.build();
    const auto psi = psi_quadratic();
    const bool identity = A.distance(CoefficientMatrix::identity(cfg_.grid)) == 0.0;
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    json ratios = json::array();
    for (int i = 0; i < cfg_.samples; ++i) {
      Field h = random_range_field(cfg_.grid, rng_);
      auto q = quadratic_norm(calc, OperatorKind::DB, psi, h, ladder);
      const double hn = l2_norm(h);
      const double r = q.value / (hn * hn);
      ratios.push_back(r);
      lo = std::min(lo, r);
      hi = std::max(hi, r);
      if (!q.warning.empty()) report_.data["warning"] = q.warning;
    }
    report_.data["ratios"] = ratios;
    if (identity) {
      const double dev = std::max(std::abs(lo - 0.5), std::abs(hi - 0.5)) / 0.5;
      check_le("quadratic constant for B = I", "quadratic_norm",
               "int_0^inf |psi(tD) h|^2 dt/t = |h|^2 int_0^inf s (1+s^2)^-2 ds = |h|^2 / 2", dev, tol(0.01));
    } else {
      check_in("quadratic two-sided bound", "quadratic_norm", "C^-1 |h|^2 <= Q(h) <= C |h|^2, C = 100", lo, 0.01, 100.0);
      check_in("quadratic two-sided bound (max)", "quadratic_norm", "C^-1 |h|^2 <= Q(h) <= C |h|^2, C = 100", hi, 0.01,
               100.0);
    }
  }

  void calderon() {
    auto A = coefficients();
    Calculus calc(FirstOrderSystem::from_coefficients(A));
    const auto ladder = cfg_.ladder.build();
    const auto psi = bracket_exp();
    const auto pair = calderon_pair(psi);
    report_.data["c_plus"] = pair.c_plus;
    report_.data["c_minus"] = pair.c_minus;
    double worst = 0.0;
    for (int i = 0; i < cfg_.samples; ++i) {
      Field h = calc.range_projection(OperatorKind::DB, random_field(cfg_.grid, rng_));
      auto Q = quadrature_Q(calc, OperatorKind::DB, psi, h, ladder);
      Field back = quadrature_T(calc, OperatorKind::DB, pair.phi, Q);
      worst = std::max(worst, l2_norm(back - h) / l2_norm(h));
    }
    check_le("Calderon reproducing", "quadrature_T o quadrature_Q", "sum_j w_j phi(t_j DB) psi(t_j DB) h = h", worst,
             tol(1e-3));
  }

  double nt_ratio(const GridSpec& g, std::uint64_t seed, int band) {
    Rng rng(seed);
    ExperimentConfig c = cfg_;
    c.grid = g;
    Rng crng(cfg_.seed);
    Calculus calc(FirstOrderSystem::from_coefficients(build_coefficients(c, crng)));
    Field h = calc.range_projection(OperatorKind::DB, random_field(g, rng, band));
    auto e = calc.expand(OperatorKind::DB, h);
    auto F = TentField::sample(cfg_.ladder.build(), [&](double t) { return e.eval(exp_abs(t)); });
    return lp_norm(g, nt_maximal(F, cfg_.whitney), 2.0) / l2_norm(h);
  }

  void nt_max() {
    const int band = std::min(3, cfg_.grid.G / 4);
    const GridSpec fine(cfg_.grid.n, 2 * cfg_.grid.G, cfg_.grid.m);
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0, drift = 0.0;
    json series = json::array();
    for (int i = 0; i < cfg_.samples; ++i) {
      const std::uint64_t s = rng_();
      const double r1 = nt_ratio(cfg_.grid, s, band), r2 = nt_ratio(fine, s, band);
      series.push_back({r1, r2});
      lo = std::min(lo, r1);
      hi = std::max(hi, r1);
      drift = std::max(drift, std::abs(r2 - r1) / r1);
    }
    report_.data["ratios"] = series;
    check_in("N* lower/upper bound (min)", "nt_maximal", "|N*(e^{-t|DB|}h)|_2 / |h|_2 in [0.1, 10]", lo, 0.1, 10.0);
    check_in("N* lower/upper bound (max)", "nt_maximal", "|N*(e^{-t|DB|}h)|_2 / |h|_2 in [0.1, 10]", hi, 0.1, 10.0);
    check_le("N* refinement drift", "nt_maximal", "ratio(G) vs ratio(2G), band-limited h", drift, tol(0.1));
  }

  void nt_sharp_run() {
    auto A = coefficients();
    Calculus calc(FirstOrderSystem::from_coefficients(A));
    const auto ladder = cfg_.ladder.build();
    Field c = plane_wave(cfg_.grid, {0, 0}, Eigen::VectorXcd::Ones(cfg_.grid.channels()));
    const double cn = lp_norm(cfg_.grid, nt_sharp(calc, c, ladder, cfg_.whitney), 2.0) / l2_norm(c);
    check_le("sharp function kills constants", "nt_sharp", "e^{-t|BD|} c = c for constants c", cn, tol(1e-10));
    double hi = 0.0;
    for (int i = 0; i < cfg_.samples; ++i) {
      Field h = random_field(cfg_.grid, rng_, std::min(3, cfg_.grid.G / 4));
      hi = std::max(hi, lp_norm(cfg_.grid, nt_sharp(calc, h, ladder, cfg_.whitney), 2.0) / l2_norm(h));
    }
    report_.data["max_ratio"] = hi;
    check_le("sharp function bound", "nt_sharp", "|N#(h)|_2 <= C |h|_2, C = 10", hi, 10.0);
  }

  void bvp_checks(const BoundaryProblems& bp, const BVPSolution& sol, const std::string& label) {
    const auto& calc = bp.calculus();
    report_.data[label + " condition"] = sol.condition;
    check_le(label + " trace residual", "solve_" + label, "boundary condition of the computed trace",
             sol.trace_residual, tol(1e-8));
    check_le(label + " representation", "boundary_layer_representation_check",
             "u(t) = S_t(du/dnu_A) - D_t(u(0)) modulo constants",
             boundary_layer_representation_check(calc, sol, {0.01, 0.1, 0.5, 1.0}), tol(1e-6));
    check_le(label + " equation residual", "equation_residual", "d_t F + DB F = 0 (7-point FD in t)",
             equation_residual(calc, sol, TLadder::log_spaced(1.0 / 64, 4.0, 8)), tol(1e-3));
  }

  void bvp() {
    need_variant({"regularity", "neumann", "dirichlet"});
    BoundaryProblems bp(coefficients());
    const auto& g = cfg_.grid;
    for (int i = 0; i < cfg_.samples; ++i) {
      BoundaryData f = random_scalar(g, rng_);
      if (cfg_.variant == "regularity") {
        bvp_checks(bp, bp.solve_regularity(gradient(g, f)), "regularity");
      } else if (cfg_.variant == "neumann") {
        bvp_checks(bp, bp.solve_neumann(f), "neumann");
      } else {
        auto sol = bp.solve_dirichlet(f);
        bvp_checks(bp, sol, "dirichlet");
        check_le("dirichlet trace", "solve_dirichlet", "u(0) = f",
                 boundary_norm(g, sol.dirichlet_trace() - f) / boundary_norm(g, f), tol(1e-8));
        BoundaryData back = bp.neumann_to_dirichlet(bp.dirichlet_to_neumann(f));
        check_le("Neumann-Dirichlet inverse", "neumann_to_dirichlet o dirichlet_to_neumann", "ND(DN f) = f",
                 boundary_norm(g, back - f) / boundary_norm(g, f), tol(1e-8));
      }
    }
  }

  void layers() {
    need_variant({"jump", "duality", "representation"});
    const auto& g = cfg_.grid;
    for (int i = 0; i < cfg_.samples; ++i) {
      auto A = coefficients();
      Calculus calc(FirstOrderSystem::from_coefficients(A));
      BoundaryData f = random_scalar(g, rng_);
      if (cfg_.variant == "jump") {
        auto j = layer_jumps(calc, f);
        check_le("single layer jump", "grad_single_layer", "grad S_{0+} f - grad S_{0-} f = [f; 0]", j.single, tol(1e-8));
        check_le("double layer jump", "double_layer", "D_{0+} f - D_{0-} f = -f", j.dbl, tol(1e-8));
      } else if (cfg_.variant == "duality") {
        Calculus adj(FirstOrderSystem::from_coefficients(A.adjoint()));
        BoundaryData gd = random_scalar(g, rng_);
        for (double t : {0.1, 0.3, 1.0}) {
          auto r = layer_duality_check(calc, adj, t, f, gd);
          const std::string ts = std::to_string(t).substr(0, 3);
          check_le("single layer duality t=" + ts, "single_layer", "<g, S_t^A f> = <S_{-t}^{A*} g, f>", r.single,
                   tol(1e-6));
          check_le("double layer duality t=" + ts, "double_layer",
                   "<g, D_t^A f> = <(grad_{A*} S_{-t}^{A*} g)_perp, f>", r.dbl, tol(1e-6));
        }
      } else {
        BoundaryProblems bp(A);
        check_le("representation (dirichlet)", "boundary_layer_representation_check",
                 "u(t) = S_t(du/dnu_A) - D_t(u(0)) modulo constants",
                 boundary_layer_representation_check(bp.calculus(), bp.solve_dirichlet(f), {0.01, 0.1, 0.5, 1.0}),
                 tol(1e-6));
        check_le("representation (neumann)", "boundary_layer_representation_check",
                 "u(t) = S_t(du/dnu_A) - D_t(u(0)) modulo constants",
                 boundary_layer_representation_check(bp.calculus(), bp.solve_neumann(f), {0.01, 0.1, 0.5, 1.0}),
                 tol(1e-6));
      }
    }
  }

  void oracle() {
    need_variant({"laplacian", "block", "one-d"});
    const auto& g = cfg_.grid;
    if (cfg_.variant == "laplacian") {
      BoundaryProblems bp(CoefficientMatrix::identity(g));
      for (int k = 1; k <= 3; ++k) {
        BoundaryData f(g.points(), g.m);
        for (int p = 0; p < g.points(); ++p)
          for (int a = 0; a < g.m; ++a) f(p, a) = std::cos(k * g.coordinates(p)[0]);
        auto sol = bp.solve_dirichlet(f);
        double worst = 0.0;
        for (double t : {0.0, 0.1, 0.5, 1.0, 2.0}) {
          BoundaryData ex = std::exp(-k * t) * f;
          worst = std::max(worst, boundary_norm(g, sol.potential(t) - ex) / boundary_norm(g, ex));
        }
        const std::string ks = std::to_string(k);
        check_le("Laplace Dirichlet k=" + ks, "solve_dirichlet", "u(t, x) = e^{-|k| t} cos(kx)", worst, tol(1e-8));
        check_le("Laplace DN symbol k=" + ks, "dirichlet_to_neumann", "DN cos(kx) = -|k| cos(kx)",
                 boundary_norm(g, bp.dirichlet_to_neumann(f) + double(k) * f) / (k * boundary_norm(g, f)),
                 tol(1e-8));
      }
    } else if (cfg_.variant == "block") {
      auto A = cfg_.coefficients.kind == "identity" ? random_block_diagonal(g, rng_, 0.5) : coefficients();
      Calculus calc(FirstOrderSystem::from_coefficients(A));
      double worst = 0.0;
      for (int i = 0; i < cfg_.samples; ++i) worst = std::max(worst, kato_check(calc, A, random_scalar(g, rng_)).relative_error());
      check_le("Kato square root identity", "kato_check", "|L^{1/2} u|^2 = Re<d grad u, grad u>", worst, tol(1e-6));
    } else {
      require(g.n == 1, "oracle one-d needs n = 1");
      for (int i = 0; i < cfg_.samples; ++i) {
        auto A = coefficients();
        auto sys = FirstOrderSystem::from_coefficients(A);
        Eigen::BDCSVD<Eigen::MatrixXcd> svd(sys->dense(OperatorKind::DB));
        const auto& sv = svd.singularValues();
        int nullity = 0;
        for (int k = 0; k < sv.size(); ++k) nullity += sv(k) <= 1e-10 * sv(0);
        // The k = 0 block of D is zero, so the kernel is exactly the constants.
        check_in("kernel of DB is the k=0 block", "FirstOrderSystem::dense", "dim ker DB = N (constants only)",
                 nullity, g.channels(), g.channels());
        report_.data["smallest_nonzero_singular_value"] = sv(sv.size() - 1 - g.channels());
      }
    }
  }

  void sweep() {
    need_variant({"aperture", "perturbation"});
    const auto& g = cfg_.grid;
    if (cfg_.variant == "aperture") {
      Calculus calc(FirstOrderSystem::from_coefficients(coefficients()));
      Field h = random_range_field(g, rng_, std::min(3, g.G / 4));
      auto F = quadrature_Q(calc, OperatorKind::DB, psi_quadratic(), h, cfg_.ladder.build());
      json series = json::array();
      double base = 0.0, lo = std::numeric_limits<double>::infinity(), hi = 0.0;
      for (double a : {0.5, 1.0, 2.0, 4.0}) {
        WhitneyParams wp = cfg_.whitney;
        wp.aperture = a;
        const double v = tent_norm(F, 2.0, wp);
        series.push_back({a, v});
        if (a == 1.0) base = v;
      }
      for (auto& s : series) {
        const double r = s[1].get<double>() / base;
        lo = std::min(lo, r);
        hi = std::max(hi, r);
      }
      report_.data["aperture_norms"] = series;
      check_in("aperture equivalence (min ratio)", "tent_norm", "|SF|_{a} ~ |SF|_{1}", lo, 0.05, 20.0);
      check_in("aperture equivalence (max ratio)", "tent_norm", "|SF|_{a} ~ |SF|_{1}", hi, 0.05, 20.0);
    } else {
      auto A = coefficients();
      auto E = smooth_perturbation(g, rng_, 1.0);
      BoundaryData f = random_scalar(g, rng_);
      json series = json::array();
      bool monotone = true;
      double prev = 0.0;
      for (double eps : {0.0, 0.05, 0.1, 0.2, 0.3}) {
        PointwiseMatrices v = A.values();
        for (int p = 0; p < g.points(); ++p) v[p] += eps * E.at(p);
        BoundaryProblems bp(CoefficientMatrix(g, std::move(v)));
        const double cond = bp.solve_dirichlet(f).condition;
        series.push_back({eps, cond});
        monotone = monotone && cond >= prev * (1 - 1e-9);
        prev = cond;
      }
      report_.data["dirichlet_condition"] = series;
      report_.data["monotone"] = monotone;
      check_le("Dirichlet solvable along the sweep", "solve_dirichlet", "trace map condition < 1e6", prev, 1e6);
    }
  }

  void calculus() {
    need_variant({"paths", "identities", "intertwining"});
    const auto& g = cfg_.grid;
    Calculus calc(FirstOrderSystem::from_coefficients(coefficients()));
    report_.data["omega"] = calc.accretivity().omega;
    if (cfg_.variant == "paths") {
      auto psi = rational({0.0, 1.0}, {1.0, cplx(0, 4), -6.0, cplx(0, -4), 1.0});
      double worst = 0.0;
      for (int i = 0; i < cfg_.samples; ++i) {
        Field h = random_field(g, rng_);
        for (auto T : {OperatorKind::DB, OperatorKind::BD}) {
          Field a = calc.apply(psi, T, h, CalculusPath::contour), b = calc.apply(psi, T, h, CalculusPath::eigen);
          worst = std::max(worst, l2_norm(a - b) / l2_norm(b));
        }
      }
      check_le("contour vs eigen", "Calculus::apply", "psi(T) by Cauchy integral = psi(T) by eigen-expansion", worst,
               tol(1e-6));
    } else if (cfg_.variant == "identities") {
      double split = 0.0, sgn2 = 0.0, semi = 0.0;
      for (int i = 0; i < cfg_.samples; ++i) {
        Field h = random_field(g, rng_);
        const Field Ph = calc.system().apply_P(h);
        auto [hp, hm] = spectral_split(calc, h);
        split = std::max(split, l2_norm(hp + hm - Ph) / l2_norm(Ph));
        Field r = calc.range_projection(OperatorKind::DB, h);
        Field s2 = calc.apply(sgn(), OperatorKind::DB, calc.apply(sgn(), OperatorKind::DB, r));
        sgn2 = std::max(sgn2, l2_norm(s2 - r) / l2_norm(r));
        for (auto [s, t] : {std::pair{0.1, 0.4}, std::pair{0.5, 1.5}}) {
          Field a = calc.semigroup(OperatorKind::DB, s, calc.semigroup(OperatorKind::DB, t, h));
          Field b = calc.semigroup(OperatorKind::DB, s + t, h);
          semi = std::max(semi, l2_norm(a - b) / l2_norm(b));
        }
      }
      check_le("chi+ + chi- = P", "spectral_split", "chi+(DB) Ph + chi-(DB) Ph = Ph", split, tol(1e-8));
      check_le("sgn^2 = 1 on the range", "Calculus::apply", "sgn(DB)^2 h = h for h in range(DB)", sgn2, tol(1e-8));
      check_le("semigroup law", "Calculus::semigroup", "e^{-s|DB|} e^{-t|DB|} = e^{-(s+t)|DB|}", semi, tol(1e-8));
    } else {
      double worst = 0.0;
      const auto ladder = cfg_.ladder.build();
      for (int i = 0; i < cfg_.samples; ++i) {
        Field h = random_field(g, rng_);
        Field Dh = calc.system().apply_D(h);
        auto eh = calc.expand(OperatorKind::BD, h);
        auto eD = calc.expand(OperatorKind::DB, Dh);
        for (int j = 0; j < ladder.size(); ++j) {
          const double t = ladder.t(j);
          Field a = calc.system().apply_D(eh.eval(exp_abs(t)));
          worst = std::max(worst, l2_norm(a - eD.eval(exp_abs(t))) / l2_norm(Dh));
        }
      }
      check_le("intertwining", "Calculus::semigroup", "D e^{-t|BD|} h = e^{-t|DB|} D h", worst, tol(1e-8));
    }
  }

  void offdiag() {
    const auto& g = cfg_.grid;
    require(g.n == 1, "offdiag: the sweep uses intervals, n = 1");
    auto sys = FirstOrderSystem::from_coefficients(coefficients());
    sys->certify();
    std::vector<int> E, F;
    for (int p = 0; p < g.points(); ++p) {
      const double x = g.coordinates(p)[0];
      if (x < 1.0) E.push_back(p);
      if (x >= 2.0 && x < 3.0) F.push_back(p);
    }
    const double d = set_distance(g, E, F);
    std::vector<double> ts;
    for (int i = 0; i <= 10; ++i) ts.push_back(d / std::pow(10.0, i / 10.0));
    auto rep = offdiag_probe(*sys, OperatorKind::DB, ts, E, F);
    json series = json::array();
    for (size_t i = 0; i < ts.size(); ++i) series.push_back({d / ts[i], rep.norms[i]});
    report_.data["dist_over_t_vs_norm"] = series;
    report_.data["method"] = rep.method;
    check_in("off-diagonal decay exponent", "offdiag_probe", "|1_E (1 + itDB)^{-1} 1_F| <~ (1 + dist/t)^{-N}, N >= 2",
             rep.exponent, 2.0, std::numeric_limits<double>::max());
  }

  ExperimentConfig cfg_;
  Rng rng_;
  Report report_;
};

inline Report run_experiment(const ExperimentConfig& cfg) { return Runner(cfg).run(); }

}  // namespace halfspace::harness
