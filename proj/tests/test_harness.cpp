#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "halfspace/harness.hpp"

using namespace halfspace;
using namespace halfspace::harness;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("halfspace_test_" + name)).string();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  os << text;
}

}  // namespace

TEST(Config, RoundTrip) {
  ExperimentConfig c;
  c.experiment = "layers";
  c.variant = "jump";
  c.grid = GridSpec(2, 16, 2);
  c.coefficients.kind = "random";
  c.coefficients.size = 0.25;
  c.coefficients.hermitian = true;
  c.ladder.t_min = 0.001;
  c.whitney.aperture = 2.0;
  c.seed = 1234567890123ULL;
  c.tolerance_scale = 3.0;
  auto back = ExperimentConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
  EXPECT_EQ(back.seed, c.seed);
}

TEST(Config, ParseErrorsCarryLineNumbers) {
  const std::string text = "{\n  \"experiment\": \"quadratic\",\n  \"seed\": ,\n}\n";
  try {
    ExperimentConfig::parse(text, "cfg.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(std::string(e.what()).rfind("cfg.json:3:", 0), 0u) << e.what();
  }
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(ExperimentConfig::parse(R"({"experimant": "quadratic"})"), Error);
  EXPECT_THROW(ExperimentConfig::parse(R"({"grid": {"n": 1, "G": 12}})"), Error);
  EXPECT_THROW(ExperimentConfig::parse(R"({"seed": "abc"})"), Error);
  EXPECT_THROW(ExperimentConfig::parse(R"({"whitney": {"c0": 0.5}})"), Error);
}

TEST(Samples, RoundTrip) {
  GridSpec g(2, 8, 1);
  Rng rng(3);
  auto A = random_accretive(g, rng, 0.3);
  const auto path = temp_path("samples.bin");
  save_samples(path, A);
  auto B = load_coefficients(path, g);
  EXPECT_EQ(B.distance(A), 0.0);
  EXPECT_THROW(load_coefficients(path, GridSpec(2, 16, 1)), Error);
}

TEST(Samples, IdentityFile) {
  GridSpec g(1, 8, 1);
  const auto path = temp_path("identity.bin");
  save_samples(path, CoefficientMatrix::identity(g));
  EXPECT_EQ(load_coefficients(path).distance(CoefficientMatrix::identity(g)), 0.0);
}

TEST(Samples, TruncatedFileIsAShapeError) {
  GridSpec g(1, 8, 1);
  const auto path = temp_path("trunc.bin");
  save_samples(path, CoefficientMatrix::identity(g));
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 16);
  try {
    load_coefficients(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("shape mismatch"), std::string::npos);
  }
}

TEST(Samples, NonFiniteAndSingular) {
  GridSpec g(1, 8, 1);
  PointwiseMatrices v(8, Eigen::MatrixXcd::Identity(2, 2));
  v[2](0, 0) = 0.0;
  const auto path = temp_path("singular.bin");
  save_samples(path, CoefficientMatrix(g, v));
  EXPECT_THROW(load_coefficients(path), Error);

  save_samples(path, CoefficientMatrix::identity(g));
  std::fstream fs(path, std::ios::in | std::ios::out | std::ios::binary);
  std::string header;
  std::getline(fs, header);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  fs.seekp(static_cast<std::streamoff>(header.size() + 1 + 16 * 5));
  fs.write(reinterpret_cast<const char*>(&nan), 8);
  fs.close();
  EXPECT_THROW(load_coefficients(path), Error);
}

TEST(Fourier, MatchesDirectEvaluation) {
  // {k=0: I, k=+-1: 0.05 E} with E = [[0, 1], [1, 0]]: A(x) = I + 0.1 cos(x) E.
  GridSpec g(1, 16, 1);
  const auto path = temp_path("fourier.json");
  write_text(path, R"({"format": "fourier", "n": 1, "m": 1, "terms": [
    {"k": [0], "matrix": [[1, 0], [0, 1]]},
    {"k": [1], "matrix": [[0, 0.05], [0.05, 0]]},
    {"k": [-1], "matrix": [[0, 0.05], [0.05, 0]]}]})");
  auto A = load_coefficients(path, g);
  for (int p = 0; p < g.points(); ++p) {
    Eigen::MatrixXcd expect = Eigen::MatrixXcd::Identity(2, 2);
    expect(0, 1) = expect(1, 0) = 0.1 * std::cos(g.coordinates(p)[0]);
    EXPECT_LT((A.at(p) - expect).norm(), 1e-15);
  }
}

TEST(Fourier, RejectsBadTerms) {
  GridSpec g(1, 8, 1);
  EXPECT_THROW(fourier_coefficients(g, json::parse(R"([{"k": [4], "matrix": [[1,0],[0,1]]}])")), Error);
  EXPECT_THROW(fourier_coefficients(g, json::parse(R"([{"k": [0], "matrix": [[1,0]]}])")), Error);
  EXPECT_THROW(fourier_coefficients(g, json::parse(R"([{"k": [0, 1], "matrix": [[1,0],[0,1]]}])")), Error);
}

TEST(Report, WrittenAtomicallyAndReproducible) {
  ExperimentConfig c;
  c.experiment = "layers";
  c.variant = "jump";
  c.grid = GridSpec(1, 16, 1);
  c.coefficients.kind = "random";
  c.samples = 2;
  c.output = temp_path("report.json");
  auto r1 = run_experiment(c), r2 = run_experiment(c);
  EXPECT_TRUE(r1.passed()) << r1.to_json().dump(2);
  EXPECT_EQ(r1.to_json()["checks"].dump(), r2.to_json()["checks"].dump());
  r1.write(c.output);
  EXPECT_FALSE(std::filesystem::exists(c.output + ".tmp"));
  std::ifstream is(c.output);
  auto doc = json::parse(is);
  EXPECT_EQ(doc["experiment"], "layers");
  EXPECT_TRUE(doc["passed"].get<bool>());
  EXPECT_TRUE(doc["environment"].contains("eigen"));
}

TEST(Report, FailuresAndErrorsAreNotPasses) {
  ExperimentConfig c;
  c.experiment = "bvp";
  c.variant = "sideways";
  auto r = run_experiment(c);
  EXPECT_FALSE(r.passed());
  EXPECT_FALSE(r.error.empty());
  c.experiment = "oracle";
  c.variant = "laplacian";
  c.tolerance_scale = 1e-20;
  EXPECT_FALSE(run_experiment(c).passed());
}

TEST(Experiments, QuickSuitesPass) {
  const std::vector<std::pair<std::string, std::string>> runs = {
      {"accretivity", ""},       {"quadratic", ""},          {"oracle", "laplacian"}, {"oracle", "one-d"},
      {"oracle", "block"},       {"bvp", "dirichlet"},       {"bvp", "neumann"},      {"bvp", "regularity"},
      {"layers", "duality"},     {"layers", "representation"}, {"nt-sharp", ""},      {"sweep", "aperture"},
      {"sweep", "perturbation"}, {"calculus", "identities"}, {"calculus", "paths"},   {"calculus", "intertwining"}};
  for (const auto& [e, v] : runs) {
    ExperimentConfig c;
    c.experiment = e;
    c.variant = v;
    c.grid = GridSpec(1, 32, 1);
    c.samples = 2;
    if (e != "quadratic" && e != "oracle") c.coefficients.kind = "random";
    auto r = run_experiment(c);
    EXPECT_TRUE(r.passed()) << e << " " << v << "\n" << r.to_json().dump(2);
  }
}
