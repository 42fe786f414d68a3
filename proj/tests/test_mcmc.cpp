#include "fmre/mcmc.hpp"
#include "fmre/rng.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <numbers>

using namespace fmre;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("constant target accepts every haar proposal") {
  std::mt19937_64 rng = make_rng(71);
  McmcConfig cfg;
  cfg.iterations = 500;
  cfg.burn_in = 100;
  auto trace = metropolis_hastings([](const Mat&) { return 0.0; },
                                   [](const Mat&, std::mt19937_64& r) {
                                     return std::make_pair(haar_orthogonal(2, r), 0.0);
                                   },
                                   Mat(Mat::Identity(2, 2)), cfg, rng);
  CHECK(trace.acceptance_rate == doctest::Approx(1.0));
  CHECK(static_cast<int>(trace.states.size()) == 400);
}

TEST_CASE("trace of exp(kappa tr U) matches the quadrature moment") {
  const double kappa = 1.0;
  std::mt19937_64 rng = make_rng(72);
  McmcConfig cfg;
  cfg.iterations = 20000;
  cfg.burn_in = 2000;
  auto trace = metropolis_hastings(
      [kappa](const Mat& u) { return kappa * u.trace(); },
      [](const Mat&, std::mt19937_64& r) { return std::make_pair(haar_orthogonal(2, r), 0.0); },
      Mat(Mat::Identity(2, 2)), cfg, rng);
  std::vector<double> traces;
  traces.reserve(trace.states.size());
  for (const auto& u : trace.states) traces.push_back(u.trace());

  // Haar on O(2) is half a uniform rotation angle, half a uniform reflection;
  // rotations have trace 2 cos(theta), reflections trace 0.
  auto rot_weight = [kappa](double theta) { return std::exp(2.0 * kappa * std::cos(theta)); };
  double z_rot = oracle::integrate(rot_weight, -kPi, kPi, 128) / (2 * kPi);
  double m_rot =
      oracle::integrate([&](double t) { return 2.0 * std::cos(t) * rot_weight(t); }, -kPi, kPi,
                        128) /
      (2 * kPi);
  double expected = (0.5 * m_rot) / (0.5 * z_rot + 0.5 * 1.0);

  auto [mean, se_iid] = oracle::mean_se(traces);
  double ess = effective_sample_size(traces);
  double se = se_iid * std::sqrt(static_cast<double>(traces.size()) / ess);
  CHECK(std::abs(mean - expected) < 3.0 * se);
}

TEST_CASE("fixed seed gives a bit-identical trace") {
  auto run = []() {
    std::mt19937_64 rng = make_rng(73);
    McmcConfig cfg;
    cfg.iterations = 300;
    cfg.burn_in = 50;
    return metropolis_hastings(
        [](const Mat& u) { return u.trace(); },
        [](const Mat&, std::mt19937_64& r) { return std::make_pair(haar_orthogonal(3, r), 0.0); },
        Mat(Mat::Identity(3, 3)), cfg, rng);
  };
  auto a = run();
  auto b = run();
  REQUIRE(a.states.size() == b.states.size());
  for (std::size_t i = 0; i < a.states.size(); ++i) {
    CHECK((a.states[i] - b.states[i]).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("thinning controls the trace length") {
  std::mt19937_64 rng = make_rng(74);
  McmcConfig cfg;
  cfg.iterations = 1000;
  cfg.burn_in = 100;
  cfg.thin = 3;
  auto trace = metropolis_hastings(
      [](double x) { return -0.5 * x * x; },
      [](double x, std::mt19937_64& r) {
        std::normal_distribution<double> g(0.0, 1.0);
        return std::make_pair(x + g(r), 0.0);
      },
      0.0, cfg, rng);
  CHECK(static_cast<int>(trace.states.size()) == (1000 - 100) / 3);
}

TEST_CASE("nan handling") {
  std::mt19937_64 rng = make_rng(75);
  McmcConfig cfg;
  cfg.iterations = 10;
  cfg.burn_in = 0;
  auto nan_target = [](double x) {
    return std::isnan(x) ? std::numeric_limits<double>::quiet_NaN() : -x * x;
  };
  CHECK_THROWS_AS(metropolis_hastings(nan_target,
                                      [](double x, std::mt19937_64&) {
                                        return std::make_pair(x, 0.0);
                                      },
                                      std::numeric_limits<double>::quiet_NaN(), cfg, rng),
                  std::runtime_error);
  // NaN at proposals only: every proposal is rejected, chain survives.
  auto trace = metropolis_hastings(nan_target,
                                   [](double, std::mt19937_64&) {
                                     return std::make_pair(
                                         std::numeric_limits<double>::quiet_NaN(), 0.0);
                                   },
                                   1.0, cfg, rng);
  CHECK(trace.acceptance_rate == doctest::Approx(0.0));
  for (double s : trace.states) CHECK(s == 1.0);
}

TEST_CASE("debug trace dump matches the acceptance bookkeeping") {
  std::mt19937_64 rng = make_rng(76);
  std::string path = "mcmc_trace_test.csv";
  McmcConfig cfg;
  cfg.iterations = 400;
  cfg.burn_in = 0;
  cfg.debug_trace_csv = path;
  auto trace = metropolis_hastings(
      [](double x) { return -0.5 * x * x; },
      [](double x, std::mt19937_64& r) {
        std::normal_distribution<double> g(0.0, 2.0);
        return std::make_pair(x + g(r), 0.0);
      },
      0.0, cfg, rng);
  std::ifstream in(path);
  REQUIRE(in.good());
  std::string line;
  std::getline(in, line);
  CHECK(line == "step,log_target,accepted");
  int accepted = 0;
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    auto last_comma = line.rfind(',');
    accepted += std::stoi(line.substr(last_comma + 1));
  }
  in.close();
  std::remove(path.c_str());
  CHECK(rows == 400);
  CHECK(accepted == doctest::Approx(trace.acceptance_rate * 400));
}

TEST_CASE("two-state detailed balance smoke test") {
  // Discrete target on {0, 1} with weights (0.3, 0.7); proposals flip the
  // state, so acceptance follows the Metropolis rule exactly.
  std::mt19937_64 rng = make_rng(77);
  McmcConfig cfg;
  cfg.iterations = 50000;
  cfg.burn_in = 1000;
  auto trace = metropolis_hastings(
      [](int s) { return std::log(s == 0 ? 0.3 : 0.7); },
      [](int s, std::mt19937_64&) { return std::make_pair(1 - s, 0.0); }, 0, cfg, rng);
  double ones = 0.0;
  for (int s : trace.states) ones += s;
  double n = static_cast<double>(trace.states.size());
  double pval = oracle::chi2_test_pvalue({n - ones, ones}, {0.3 * n, 0.7 * n});
  CHECK(pval > 0.01);
}

TEST_CASE("gibbs posterior concentrates at the circular means when independent") {
  std::mt19937_64 rng = make_rng(78);
  int p = 2;
  Vec kappa = Vec::Constant(p, 2.0);
  Vec lambda = Vec::Zero(1);
  Vec mu_angles = (Vec(2) << 1.0, 4.5).finished();
  TorusModelParams params(TorusPoint::from_angles(mu_angles), kappa, lambda);
  std::vector<TorusPoint> data = torus_sample_iid(params, 400, rng, 50);
  McmcConfig cfg;
  cfg.iterations = 2000;
  cfg.burn_in = 500;
  auto trace = gibbs_torus_posterior(data, kappa, lambda, cfg, rng);
  // Component-wise circular MLE direction = normalized resultant.
  for (int i = 0; i < p; ++i) {
    Eigen::Vector2d resultant = Eigen::Vector2d::Zero();
    for (const auto& x : data) resultant += x.component(i);
    double target = std::atan2(resultant(1), resultant(0));
    Eigen::Vector2d mean_draw = Eigen::Vector2d::Zero();
    for (const auto& m : trace.states) mean_draw += m.component(i);
    double got = std::atan2(mean_draw(1), mean_draw(0));
    CHECK(circle_distance(got, target) < 0.1);
  }
}

TEST_CASE("gibbs posterior marginal matches the quadrature posterior") {
  std::mt19937_64 rng = make_rng(79);
  int p = 2;
  Vec kappa = Vec::Constant(p, 1.5);
  Vec lambda = Vec::Constant(1, 1.0);
  TorusModelParams params(TorusPoint::from_angles((Vec(2) << 2.0, 5.0).finished()), kappa,
                          lambda);
  std::vector<TorusPoint> data = torus_sample_iid(params, 3, rng, 50);
  McmcConfig cfg;
  cfg.iterations = 141000;
  cfg.burn_in = 1000;
  cfg.thin = 10;
  auto trace = gibbs_torus_posterior(data, kappa, lambda, cfg, rng);
  const int bins = 8;
  std::vector<double> observed(bins, 0.0);
  for (const auto& m : trace.states) {
    int b = std::min(bins - 1, static_cast<int>(bins * m.angle(0) / (2 * kPi)));
    observed[b] += 1.0;
  }
  // Posterior of mu against the flat prior by 2-D tensor quadrature.
  auto log_post = [&](double a0, double a1) {
    TorusModelParams guess(TorusPoint::from_angles((Vec(2) << a0, a1).finished()), kappa, lambda);
    double s = 0.0;
    for (const auto& x : data) s += torus_log_density_unnormalized(x, guess);
    return s;
  };
  const int m = 96;
  std::vector<double> marginal(bins, 0.0);
  double total = 0.0;
  for (int i = 0; i < m; ++i) {
    double a0 = 2 * kPi * (i + 0.5) / m;
    int b = std::min(bins - 1, static_cast<int>(bins * a0 / (2 * kPi)));
    for (int j = 0; j < m; ++j) {
      double a1 = 2 * kPi * (j + 0.5) / m;
      double w = std::exp(log_post(a0, a1));
      marginal[b] += w;
      total += w;
    }
  }
  std::vector<double> expected(bins, 0.0);
  double n = static_cast<double>(trace.states.size());
  for (int b = 0; b < bins; ++b) expected[b] = n * marginal[b] / total;
  CHECK(oracle::chi2_test_pvalue(observed, expected) > 0.01);
}

TEST_CASE("gibbs posterior is reproducible for a fixed seed") {
  std::mt19937_64 rng1 = make_rng(80);
  std::mt19937_64 rng2 = make_rng(80);
  Vec kappa = Vec::Constant(2, 2.0);
  Vec lambda = Vec::Constant(1, 0.5);
  TorusModelParams params(TorusPoint::from_angles((Vec(2) << 0.5, 1.5).finished()), kappa,
                          lambda);
  std::mt19937_64 data_rng = make_rng(81);
  std::vector<TorusPoint> data = torus_sample_iid(params, 10, data_rng, 50);
  McmcConfig cfg;
  cfg.iterations = 200;
  cfg.burn_in = 50;
  auto a = gibbs_torus_posterior(data, kappa, lambda, cfg, rng1);
  auto b = gibbs_torus_posterior(data, kappa, lambda, cfg, rng2);
  REQUIRE(a.states.size() == b.states.size());
  for (std::size_t i = 0; i < a.states.size(); ++i) {
    CHECK((a.states[i].components() - b.states[i].components()).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("effective sample size") {
  std::mt19937_64 rng = make_rng(82);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> iid(10000);
  for (auto& v : iid) v = gauss(rng);
  double ess = effective_sample_size(iid);
  CHECK(ess / iid.size() > 0.8);
  CHECK(ess / iid.size() <= 1.2);

  // AR(1) with rho = 0.9 has ESS/n near (1-rho)/(1+rho).
  std::vector<double> ar(20000);
  double x = 0.0;
  for (auto& v : ar) {
    x = 0.9 * x + gauss(rng);
    v = x;
  }
  double expected = (1.0 - 0.9) / (1.0 + 0.9);
  double got = effective_sample_size(ar) / ar.size();
  CHECK(got > 0.5 * expected);
  CHECK(got < 1.5 * expected);

  std::vector<double> constant(100, 3.14);
  CHECK(effective_sample_size(constant) == doctest::Approx(100.0));
  CHECK_THROWS_AS(effective_sample_size({1.0, 2.0}), std::invalid_argument);
}
