#include "fmre/mcmc.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numbers>

namespace fmre {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Natural parameter of the conditional of mu_i given the other components
// and the whole data set. The likelihood is symmetric in x and mu, so each
// conditional is again a circle von Mises-Fisher.
Eigen::Vector2d posterior_natural_param(int i, const Eigen::Matrix2Xd& mu,
                                        const std::vector<TorusPoint>& data, const Vec& kappa,
                                        const Vec& lambda) {
  int p = static_cast<int>(mu.cols());
  const Eigen::Matrix2d r = (Eigen::Matrix2d() << 0.0, -1.0, 1.0, 0.0).finished();
  Eigen::Vector2d eta = Eigen::Vector2d::Zero();
  for (const auto& x : data) eta += kappa(i) * x.component(i);
  for (int j = 0; j < p; ++j) {
    if (j == i) continue;
    double lam = lambda(torus_pair_index(std::min(i, j), std::max(i, j), p));
    if (lam == 0.0) continue;
    Eigen::Vector2d rmu_j = r * mu.col(j);
    for (const auto& x : data) {
      // lambda_ij (x_i . R mu_i)(x_j . R mu_j) = mu_i . [lam (x_j . R mu_j) R^T x_i]
      eta += lam * x.component(j).dot(rmu_j) * (r.transpose() * x.component(i));
    }
  }
  return eta;
}

}  // namespace

void dump_trace_csv(const std::string& path,
                    const std::vector<std::tuple<int, double, int>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("dump_trace_csv: cannot open " + path);
  out << "step,log_target,accepted\n";
  char buf[64];
  for (const auto& [step, lt, acc] : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%d\n", step, lt, acc);
    out << buf;
  }
}

ChainTrace<TorusPoint> gibbs_torus_posterior(const std::vector<TorusPoint>& data,
                                             const Vec& kappa, const Vec& lambda,
                                             const McmcConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  if (data.empty()) throw std::invalid_argument("gibbs_torus_posterior: empty data");
  int p = data.front().size();
  if (kappa.size() != p || lambda.size() != p * (p - 1) / 2) {
    throw std::invalid_argument("gibbs_torus_posterior: parameter size mismatch");
  }
  // Start from the sample Frechet mean of the data (equivariant in the data).
  Eigen::Matrix2Xd mu(2, p);
  for (int i = 0; i < p; ++i) {
    Eigen::Vector2d s = Eigen::Vector2d::Zero();
    for (const auto& x : data) s += x.component(i);
    double n = s.norm();
    mu.col(i) = n > 1e-12 ? Eigen::Vector2d(s / n) : Eigen::Vector2d(1.0, 0.0);
  }
  ChainTrace<TorusPoint> trace;
  trace.seed = cfg.seed;
  trace.states.reserve((cfg.iterations - cfg.burn_in) / cfg.thin);
  std::uniform_real_distribution<double> unif_angle(0.0, kTwoPi);
  for (int s = 0; s < cfg.iterations; ++s) {
    for (int i = 0; i < p; ++i) {
      Eigen::Vector2d eta = posterior_natural_param(i, mu, data, kappa, lambda);
      double n = eta.norm();
      if (n < 1e-12) {
        double a = unif_angle(rng);
        mu.col(i) << std::cos(a), std::sin(a);
      } else {
        VmfParams vp(UnitVector(Eigen::Vector2d(eta / n)), n);
        mu.col(i) = vmf_sample(vp, rng).coords();
      }
    }
    if (s >= cfg.burn_in && (s - cfg.burn_in + 1) % cfg.thin == 0) {
      trace.states.emplace_back(mu);
    }
  }
  trace.acceptance_rate = 1.0;  // Gibbs sweeps always move
  return trace;
}

double effective_sample_size(const std::vector<double>& trace) {
  std::size_t n = trace.size();
  if (n < 10) throw std::invalid_argument("effective_sample_size: need at least 10 samples");
  auto [lo, hi] = std::minmax_element(trace.begin(), trace.end());
  if (*lo == *hi) return static_cast<double>(n);  // constant trace, by convention
  double mean = 0.0;
  for (double v : trace) mean += v;
  mean /= static_cast<double>(n);
  auto autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) s += (trace[i] - mean) * (trace[i + lag] - mean);
    return s / static_cast<double>(n);
  };
  double c0 = autocov(0);
  if (c0 < 1e-300) return static_cast<double>(n);  // constant trace
  // Sum of paired autocovariances while they stay positive.
  double tau_times_c0 = -c0;
  for (std::size_t m = 0; 2 * m + 1 < n; ++m) {
    double gamma = autocov(2 * m) + autocov(2 * m + 1);
    if (gamma <= 0.0) break;
    tau_times_c0 += 2.0 * gamma;
  }
  double tau = std::max(tau_times_c0 / c0, 1e-12);
  double ess = static_cast<double>(n) / tau;
  return std::min(ess, static_cast<double>(n));
}

}  // namespace fmre
