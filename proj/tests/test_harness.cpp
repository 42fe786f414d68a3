#include "fmre/harness.hpp"
#include "fmre/rng.hpp"
#include "fmre/serialization.hpp"

#include "oracles.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

using namespace fmre;

namespace {
constexpr double kPi = std::numbers::pi;

std::string extract_field(const std::string& body, const char* key) {
  return nlohmann::json::parse(body).at(key).dump();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(std::vector<std::string> args) {
  std::vector<const char*> argv;
  argv.push_back("fmre");
  for (const auto& a : args) argv.push_back(a.c_str());
  return cli_main(static_cast<int>(argv.size()), argv.data());
}

struct TempFile {
  explicit TempFile(std::string name) : path(std::move(name)) {}
  ~TempFile() { std::remove(path.c_str()); }
  std::string path;
};

SimConfig vmf_sim(int n, int reps) {
  SimConfig cfg("vmf_test", VmfParams(UnitVector(Vec::Unit(3, 0)), 2.0));
  cfg.sample_size = n;
  cfg.replicates = reps;
  cfg.estimators = {"sample-frechet", "mre-closed-form", "true-mean-oracle"};
  cfg.threads = 1;
  return cfg;
}
}  // namespace

TEST_CASE("true-mean oracle has zero risk") {
  SimConfig cfg = vmf_sim(5, 10);
  std::vector<RiskRow> rows = estimate_risk(cfg);
  bool found = false;
  for (const auto& r : rows) {
    if (r.estimator == "true-mean-oracle") {
      found = true;
      CHECK(r.risk == doctest::Approx(0.0).epsilon(1e-15));
    } else {
      CHECK(r.risk > 0.0);
    }
    CHECK(r.reps == 10);
    CHECK(r.failures == 0);
  }
  CHECK(found);
}

TEST_CASE("paired design: data depends only on the replicate stream") {
  SimConfig a = vmf_sim(8, 12);
  SimConfig b = vmf_sim(8, 12);
  b.estimators = {"sample-frechet"};  // different estimator subset
  std::vector<RiskRow> ra = estimate_risk(a);
  std::vector<RiskRow> rb = estimate_risk(b);
  double risk_a = -1.0, risk_b = -2.0;
  for (const auto& r : ra) {
    if (r.estimator == "sample-frechet") risk_a = r.risk;
  }
  for (const auto& r : rb) {
    if (r.estimator == "sample-frechet") risk_b = r.risk;
  }
  CHECK(risk_a == risk_b);
}

TEST_CASE("risk is insensitive to a rotated truth") {
  SimConfig a = vmf_sim(10, 40);
  std::mt19937_64 rng = make_rng(131);
  Mat u = haar_orthogonal(3, rng);
  SimConfig b("vmf_test_rotated",
              VmfParams(apply_isometry(OrthogonalMap{u}, UnitVector(Vec::Unit(3, 0))), 2.0));
  b.sample_size = 10;
  b.replicates = 40;
  b.estimators = a.estimators;
  b.threads = 1;
  std::vector<RiskRow> ra = estimate_risk(a);
  std::vector<RiskRow> rb = estimate_risk(b);
  for (std::size_t i = 0; i < ra.size(); ++i) {
    if (ra[i].estimator == "true-mean-oracle") continue;
    CHECK(std::abs(ra[i].risk - rb[i].risk) < 3.0 * (ra[i].mc_se + rb[i].mc_se));
  }
}

TEST_CASE("threaded and single-threaded runs agree") {
  SimConfig a = vmf_sim(6, 16);
  SimConfig b = vmf_sim(6, 16);
  a.threads = 1;
  b.threads = 2;
  std::vector<RiskRow> ra = estimate_risk(a);
  std::vector<RiskRow> rb = estimate_risk(b);
  REQUIRE(ra.size() == rb.size());
  for (std::size_t i = 0; i < ra.size(); ++i) {
    CHECK(ra[i].risk == rb[i].risk);
    CHECK(ra[i].mc_se == rb[i].mc_se);
  }
}

TEST_CASE("table1 smoke run keeps the published ordering at reduced scale") {
  TableOptions opts;
  opts.replicates = 20;
  opts.seed = 7;
  opts.p_filter = 2;
  opts.n_filter = 10;
  opts.threads = 2;
  std::vector<RiskRow> rows = run_table1(opts);
  REQUIRE(rows.size() == 4);
  double sample = 0.0, mle = 0.0, mom = 0.0;
  for (const auto& r : rows) {
    CHECK(r.p == 2);
    CHECK(r.n == 10);
    if (r.estimator == "sample-frechet") sample = r.risk;
    if (r.estimator == "mle") mle = r.risk;
    if (r.estimator == "mre-mom-orbit") mom = r.risk;
  }
  CHECK(mom < sample);
  CHECK(mom < mle);
}

TEST_CASE("table outputs have the documented schema") {
  TableOptions opts;
  opts.replicates = 2;
  opts.seed = 3;
  opts.p_filter = 2;
  opts.n_filter = 5;
  opts.threads = 2;
  std::vector<RiskRow> rows = run_table1(opts);
  std::string csv = rows_to_csv(rows);
  std::istringstream lines(csv);
  std::string header;
  std::getline(lines, header);
  CHECK(header == "scenario,estimator,p,n,kappa,lambda,reps,failures,risk,mc_se,seed");
  int count = 0;
  std::string line;
  while (std::getline(lines, line)) {
    if (!line.empty()) ++count;
  }
  CHECK(count == 4);
  // Wishart rows leave kappa/lambda empty.
  CHECK(csv.find("wishart_p2_n5,sample-frechet,2,5,,,2,0,") != std::string::npos);
  std::string json = rows_to_json(rows);
  CHECK(json.find("\"estimator\": \"mre-mom-orbit\"") != std::string::npos);
}

TEST_CASE("point serialization round trips") {
  std::mt19937_64 rng = make_rng(132);
  std::vector<ManifoldPoint> points;
  points.emplace_back(uniform_on_sphere(2, rng));
  points.emplace_back(
      apply_isometry(random_lorentz(2, 1.0, rng), HyperboloidPoint::apex(2, 1.5)));
  points.emplace_back(TorusPoint::from_angles((Vec(3) << 0.2, 3.3, 5.5).finished()));
  {
    Mat d = Mat::Zero(2, 2);
    d(0, 0) = 2.0;
    d(1, 1) = 0.7;
    points.emplace_back(SpdMatrix(d));
  }
  points.emplace_back(uniform_on_stiefel(4, 2, rng));
  for (const auto& p : points) {
    ManifoldPoint back = point_from_json(point_to_json(p));
    CHECK(manifold_distance(p, back) < 1e-12);
  }
}

TEST_CASE("data files round trip") {
  std::mt19937_64 rng = make_rng(133);
  std::vector<ManifoldPoint> points;
  for (int i = 0; i < 7; ++i) points.emplace_back(uniform_on_sphere(3, rng));
  std::ostringstream out;
  write_data_file(out, points);
  std::istringstream in(out.str());
  std::vector<ManifoldPoint> back = read_data_file(in);
  REQUIRE(back.size() == points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    CHECK(manifold_distance(points[i], back[i]) < 1e-12);
  }
}

TEST_CASE("cli sample emits valid unit vectors deterministically") {
  TempFile out1("cli_sample_1.txt");
  TempFile out2("cli_sample_2.txt");
  CHECK(run_cli({"sample", "--family", "vmf", "--dim", "2", "--kappa", "2", "--n", "100",
                 "--seed", "1", "--out", out1.path}) == 0);
  CHECK(run_cli({"sample", "--family", "vmf", "--dim", "2", "--kappa", "2", "--n", "100",
                 "--seed", "1", "--out", out2.path}) == 0);
  std::string body1 = slurp(out1.path);
  CHECK(body1 == slurp(out2.path));  // byte-identical reruns
  std::istringstream in(body1);
  std::vector<ManifoldPoint> points = read_data_file(in);
  REQUIRE(points.size() == 100);
  for (const auto& p : points) {
    CHECK(std::abs(std::get<UnitVector>(p).coords().norm() - 1.0) < 1e-9);
  }
}

TEST_CASE("cli estimate and frechet-mean consume data files") {
  TempFile data("cli_data.txt");
  TempFile est_out("cli_est.json");
  TempFile mean_out("cli_mean.json");
  CHECK(run_cli({"sample", "--family", "vmf", "--dim", "2", "--kappa", "3", "--n", "50",
                 "--seed", "5", "--out", data.path}) == 0);
  CHECK(run_cli({"estimate", "--estimator", "vmf-mre", "--data", data.path, "--out",
                 est_out.path}) == 0);
  std::string est = slurp(est_out.path);
  CHECK(est.find("\"estimate\"") != std::string::npos);
  CHECK(run_cli({"frechet-mean", "--data", data.path, "--out", mean_out.path}) == 0);
  std::string mean = slurp(mean_out.path);
  CHECK(mean.find("\"converged\": true") != std::string::npos);

  // The closed form and the sample Frechet mean are close for this cloud.
  ManifoldPoint est_point = point_from_json(extract_field(est, "estimate"));
  ManifoldPoint mean_point = point_from_json(extract_field(mean, "mean"));
  CHECK(manifold_distance(est_point, mean_point) < 0.2);
}

TEST_CASE("cli table1 produces four rows and is byte deterministic") {
  TempFile out1("cli_t1_a.csv");
  TempFile out2("cli_t1_b.csv");
  std::vector<std::string> args = {"table1", "--p",    "2",        "--n",   "10",
                                   "--reps", "8",      "--seed",   "7",     "--threads",
                                   "2",      "--out",  out1.path};
  CHECK(run_cli(args) == 0);
  args.back() = out2.path;
  CHECK(run_cli(args) == 0);
  std::string a = slurp(out1.path);
  CHECK(a == slurp(out2.path));
  int lines = 0;
  for (char c : a) {
    if (c == '\n') ++lines;
  }
  CHECK(lines == 5);  // header + 4 estimator rows
}

TEST_CASE("cli honors config files with flag overrides") {
  TempFile cfg("cli_cfg.ini");
  TempFile out("cli_cfg_out.csv");
  {
    std::ofstream f(cfg.path);
    f << "p=2\nn=10\nreps=4\nseed=11\nthreads=2\n";
  }
  CHECK(run_cli({"table1", "--config", cfg.path, "--out", out.path}) == 0);
  std::string body = slurp(out.path);
  CHECK(body.find("wishart_p2_n10") != std::string::npos);
  CHECK(body.find(",4,0,") != std::string::npos);  // reps column from the file
  // A flag overrides the file value.
  TempFile out2("cli_cfg_out2.csv");
  CHECK(run_cli({"table1", "--config", cfg.path, "--reps", "3", "--out", out2.path}) == 0);
  CHECK(slurp(out2.path).find(",3,0,") != std::string::npos);
}

TEST_CASE("cli error handling") {
  CHECK(run_cli({"table1", "--no-such-flag"}) == 1);
  CHECK(run_cli({"estimate", "--estimator", "vmf-mre", "--data", "missing_file.txt"}) == 1);
  CHECK(run_cli({"frechet-mean", "--data", "missing_file.txt"}) == 1);
  CHECK(run_cli({}) == 1);
}

TEST_CASE("invalid configurations are rejected") {
  SimConfig cfg = vmf_sim(5, 0);
  CHECK_THROWS_AS(estimate_risk(cfg), std::invalid_argument);
  SimConfig cfg2 = vmf_sim(5, 3);
  cfg2.estimators = {"not-an-estimator"};
  CHECK_THROWS_AS(estimate_risk(cfg2), std::invalid_argument);
  SimConfig cfg3 = vmf_sim(5, 3);
  cfg3.estimators.clear();
  CHECK_THROWS_AS(estimate_risk(cfg3), std::invalid_argument);
}
