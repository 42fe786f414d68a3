#include "fmre/estimators.hpp"

#include "nelder_mead.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fmre {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

template <typename T>
std::vector<T> unwrap_points(const std::vector<ManifoldPoint>& data, const char* who) {
  if (data.empty()) throw std::invalid_argument(std::string(who) + ": empty data");
  std::vector<T> out;
  out.reserve(data.size());
  for (const auto& p : data) {
    if (!std::holds_alternative<T>(p)) {
      throw std::invalid_argument(std::string(who) + ": data does not match the orbit manifold");
    }
    out.push_back(std::get<T>(p));
  }
  return out;
}

Mat random_skew(int p, double scale, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Mat s = Mat::Zero(p, p);
  for (int i = 0; i < p; ++i) {
    for (int j = i + 1; j < p; ++j) {
      double z = scale * gauss(rng);
      s(i, j) = z;
      s(j, i) = -z;
    }
  }
  return s;
}

// Orthogonal matrix whose first column equals the unit vector s.
Mat orthogonal_with_first_column(const Vec& s) {
  int d = static_cast<int>(s.size());
  Vec v = s;
  v(0) -= 1.0;
  double vv = v.squaredNorm();
  if (vv < 1e-24) return Mat::Identity(d, d);
  return Mat::Identity(d, d) - (2.0 / vv) * v * v.transpose();
}

MreDiagnostics make_diagnostics(double acceptance, int chain_length, bool frechet_ok) {
  MreDiagnostics d;
  d.acceptance_rate = acceptance;
  d.chain_length = chain_length;
  d.frechet_converged = frechet_ok;
  return d;
}

void require_positive_acceptance(const double acceptance) {
  if (acceptance <= 0.0) {
    throw std::runtime_error("mre_monte_carlo: zero acceptance over the whole chain");
  }
}

std::pair<ManifoldPoint, MreDiagnostics> mre_vmf(const std::vector<ManifoldPoint>& data,
                                                 const VmfOrbit& orbit, const McmcConfig& cfg,
                                                 std::mt19937_64& rng, const MreOptions& opts) {
  auto xs = unwrap_points<UnitVector>(data, "mre_monte_carlo[vmf]");
  int d = xs.front().ambient_dim();
  Vec s = Vec::Zero(d);
  for (const auto& x : xs) s += x.coords();
  double kappa0 = orbit.kappa;
  // E P_{theta0} = mu0 by Theorem 2; chain runs over O(d) pushing mu0 = e1.
  auto log_target = [&s, kappa0](const Mat& u) { return kappa0 * s.dot(u.col(0)); };
  Mat init = s.norm() > 1e-12 ? orthogonal_with_first_column(s / s.norm()) : Mat::Identity(d, d);
  auto propose = [&cfg, d](const Mat& u, std::mt19937_64& r) {
    if (cfg.proposal == ProposalKind::UniformHaar) {
      return std::make_pair(haar_orthogonal(d, r), 0.0);
    }
    return std::make_pair(Mat(u * random_skew(d, cfg.random_walk_scale, r).exp()), 0.0);
  };
  auto trace = metropolis_hastings(log_target, propose, init, cfg, rng);
  require_positive_acceptance(trace.acceptance_rate);
  std::vector<ManifoldPoint> pushed;
  pushed.reserve(trace.states.size());
  for (const auto& u : trace.states) pushed.emplace_back(UnitVector::normalized(u.col(0)));
  FrechetResult mean = sample_frechet_mean(pushed, MetricKind::Intrinsic, opts.frechet);
  return {mean.mean, make_diagnostics(trace.acceptance_rate,
                                      static_cast<int>(trace.states.size()), mean.converged)};
}

std::pair<ManifoldPoint, MreDiagnostics> mre_hyperbolic(const std::vector<ManifoldPoint>& data,
                                                        const HyperbolicOrbit& orbit,
                                                        const McmcConfig& cfg,
                                                        std::mt19937_64& rng,
                                                        const MreOptions& opts) {
  auto xs = unwrap_points<HyperboloidPoint>(data, "mre_monte_carlo[hyperbolic]");
  int d = xs.front().ambient_dim();
  double radius = xs.front().radius();
  if (std::abs(radius - orbit.radius) > 1e-9 * std::max(1.0, radius)) {
    throw std::invalid_argument("mre_monte_carlo: orbit radius does not match the data");
  }
  Vec s = Vec::Zero(d);
  for (const auto& x : xs) s += x.coords();
  double kappa0 = orbit.kappa;
  double r2 = radius * radius;
  // Theta is the manifold itself and SO+(k,1) is unimodular, so the chain
  // runs over mu directly against vol(d mu); the group is not compact, so a
  // geodesic random walk replaces uniform proposals.
  auto log_target = [&s, kappa0, r2](const HyperboloidPoint& mu) {
    return kappa0 * minkowski_inner(s, mu.coords()) / r2;
  };
  double form = minkowski_inner(s, s);
  HyperboloidPoint init = form < 0.0
                              ? HyperboloidPoint(s * (radius / std::sqrt(-form)), radius)
                              : xs.front();
  double scale = cfg.random_walk_scale;
  auto propose = [scale, d](const HyperboloidPoint& mu, std::mt19937_64& r) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Mat basis = lorentz_translation_to(mu).l;
    Vec tangent = Vec::Zero(d);
    for (int i = 0; i + 1 < d; ++i) tangent += scale * gauss(r) * basis.col(i);
    return std::make_pair(hyperboloid_exp(mu, tangent), 0.0);
  };
  auto trace = metropolis_hastings(log_target, propose, init, cfg, rng);
  require_positive_acceptance(trace.acceptance_rate);
  std::vector<ManifoldPoint> pushed;
  pushed.reserve(trace.states.size());
  for (const auto& mu : trace.states) pushed.emplace_back(mu);
  FrechetResult mean = sample_frechet_mean(pushed, MetricKind::Intrinsic, opts.frechet);
  return {mean.mean, make_diagnostics(trace.acceptance_rate,
                                      static_cast<int>(trace.states.size()), mean.converged)};
}

struct OrthPair {
  Mat u;
  Mat v;
};

std::pair<ManifoldPoint, MreDiagnostics> mre_langevin(const std::vector<ManifoldPoint>& data,
                                                      const LangevinOrbit& orbit,
                                                      const McmcConfig& cfg, std::mt19937_64& rng,
                                                      const MreOptions& opts) {
  auto xs = unwrap_points<StiefelFrame>(data, "mre_monte_carlo[langevin]");
  int p = xs.front().rows();
  int k = xs.front().cols();
  Mat m = Mat::Zero(p, k);
  for (const auto& x : xs) m += x.entries();
  Mat h0 = StiefelFrame::canonical(p, k).entries();
  double lambda = orbit.lambda;
  auto log_target = [&m, &h0, lambda](const OrthPair& g) {
    return lambda * (m.transpose() * g.u * h0 * g.v.transpose()).trace();
  };
  // Start at the polar factor of the data sum: U [I;0] V^T = polar(M).
  OrthPair init{Mat::Identity(p, p), Mat::Identity(k, k)};
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.singularValues().minCoeff() > 1e-12) {
    Mat polar = svd.matrixU() * svd.matrixV().transpose();
    Eigen::HouseholderQR<Mat> qr(polar);
    Mat q = qr.householderQ();
    Mat rr = qr.matrixQR();
    for (int j = 0; j < k; ++j) {
      if (rr(j, j) < 0.0) q.col(j) = -q.col(j);
    }
    init.u = q;
  }
  auto propose = [&cfg, p, k](const OrthPair& g, std::mt19937_64& r) {
    if (cfg.proposal == ProposalKind::UniformHaar) {
      return std::make_pair(OrthPair{haar_orthogonal(p, r), haar_orthogonal(k, r)}, 0.0);
    }
    return std::make_pair(OrthPair{g.u * random_skew(p, cfg.random_walk_scale, r).exp(),
                                   g.v * random_skew(k, cfg.random_walk_scale, r).exp()},
                          0.0);
  };
  auto trace = metropolis_hastings(log_target, propose, init, cfg, rng);
  require_positive_acceptance(trace.acceptance_rate);
  std::vector<ManifoldPoint> pushed;
  pushed.reserve(trace.states.size());
  for (const auto& g : trace.states) {
    pushed.emplace_back(StiefelFrame(g.u * h0 * g.v.transpose()));
  }
  FrechetResult mean = sample_frechet_mean(pushed, MetricKind::Intrinsic, opts.frechet);
  return {mean.mean, make_diagnostics(trace.acceptance_rate,
                                      static_cast<int>(trace.states.size()), mean.converged)};
}

// Scalar Wishart: O(1) conjugation is trivial, but the log-Euclidean metric
// on the positive ray is translation on log sigma^2, a transitive unimodular
// action, so the MRE chain runs over log sigma^2 with the scale-invariant
// reference measure (constant in that chart).
std::pair<ManifoldPoint, MreDiagnostics> mre_wishart_scalar(const std::vector<SpdMatrix>& xs,
                                                            const WishartOrbit& orbit,
                                                            const McmcConfig& cfg,
                                                            std::mt19937_64& rng,
                                                            const MreOptions& opts) {
  int dof = orbit.dof;
  double sigma0 = orbit.eigenvalues(0);
  double xsum = 0.0;
  for (const auto& x : xs) xsum += x.entries()(0, 0);
  double n_obs = static_cast<double>(xs.size());
  // Step (1): population mean of Y/dof at sigma0^2 by Monte Carlo.
  WishartParams theta0(dof, SpdMatrix(Mat::Constant(1, 1, sigma0)));
  FrechetResult ep0 = population_frechet_mean_mc(theta0, MetricKind::Intrinsic,
                                                 opts.population_mean_draws, rng, opts.frechet);
  double ep0_log =
      std::log(std::get<SpdMatrix>(ep0.mean).entries()(0, 0)) - std::log(static_cast<double>(dof));
  auto log_target = [dof, n_obs, xsum](double u) {
    return -0.5 * (dof * n_obs * u + std::exp(-u) * xsum);
  };
  double scale = cfg.proposal == ProposalKind::RandomWalk
                     ? cfg.random_walk_scale
                     : 2.4 * std::sqrt(2.0 / (dof * n_obs));
  auto propose = [scale](double u, std::mt19937_64& r) {
    std::normal_distribution<double> gauss(0.0, scale);
    return std::make_pair(u + gauss(r), 0.0);
  };
  double init = std::log(xsum / (n_obs * dof));
  auto trace = metropolis_hastings(log_target, propose, init, cfg, rng);
  require_positive_acceptance(trace.acceptance_rate);
  double log_sigma0 = std::log(sigma0);
  double acc = 0.0;
  for (double u : trace.states) acc += ep0_log + (u - log_sigma0);
  acc /= static_cast<double>(trace.states.size());
  SpdMatrix mean(Mat::Constant(1, 1, std::exp(acc)));
  return {mean, make_diagnostics(trace.acceptance_rate, static_cast<int>(trace.states.size()),
                                 ep0.converged)};
}

std::pair<ManifoldPoint, MreDiagnostics> mre_wishart(const std::vector<ManifoldPoint>& data,
                                                     const WishartOrbit& orbit,
                                                     const McmcConfig& cfg, std::mt19937_64& rng,
                                                     const MreOptions& opts) {
  auto xs = unwrap_points<SpdMatrix>(data, "mre_monte_carlo[wishart]");
  int p = xs.front().dim();
  if (orbit.eigenvalues.size() != p) {
    throw std::invalid_argument("mre_monte_carlo: orbit dimension does not match the data");
  }
  if (p == 1) return mre_wishart_scalar(xs, orbit, cfg, rng, opts);
  int dof = orbit.dof;
  Mat sigma0 = orbit.eigenvalues.asDiagonal();
  Vec inv_eigs = orbit.eigenvalues.cwiseInverse();
  // Step (1): population log-Euclidean mean of Y/dof at Sigma0.
  WishartParams theta0(dof, SpdMatrix(sigma0));
  FrechetResult ep0 = population_frechet_mean_mc(theta0, MetricKind::Intrinsic,
                                                 opts.population_mean_draws, rng, opts.frechet);
  Mat log_m0 = matrix_log(std::get<SpdMatrix>(ep0.mean)) -
               std::log(static_cast<double>(dof)) * Mat::Identity(p, p);
  Mat xsum = Mat::Zero(p, p);
  for (const auto& x : xs) xsum += x.entries();
  auto log_target = [&xsum, &inv_eigs](const Mat& u) {
    return -0.5 * (u * inv_eigs.asDiagonal() * u.transpose() * xsum).trace();
  };
  // Aligning the sorted eigenbases maximizes the target.
  Eigen::SelfAdjointEigenSolver<Mat> xe(xsum);
  Mat init = xe.eigenvectors().rowwise().reverse();
  auto propose = [&cfg, p](const Mat& u, std::mt19937_64& r) {
    if (cfg.proposal == ProposalKind::UniformHaar) {
      return std::make_pair(haar_orthogonal(p, r), 0.0);
    }
    return std::make_pair(Mat(u * random_skew(p, cfg.random_walk_scale, r).exp()), 0.0);
  };
  auto trace = metropolis_hastings(log_target, propose, init, cfg, rng);
  require_positive_acceptance(trace.acceptance_rate);
  // Step (3)/(4): the log-Euclidean Frechet mean of the pushed points
  // U exp(log_m0) U^T is the exp of the average of U log_m0 U^T.
  Mat acc = Mat::Zero(p, p);
  for (const auto& u : trace.states) acc += u * log_m0 * u.transpose();
  acc /= static_cast<double>(trace.states.size());
  SpdMatrix mean = matrix_exp(0.5 * (acc + acc.transpose()));
  return {mean, make_diagnostics(trace.acceptance_rate, static_cast<int>(trace.states.size()),
                                 ep0.converged)};
}

std::pair<ManifoldPoint, MreDiagnostics> mre_torus(const std::vector<ManifoldPoint>& data,
                                                   const TorusOrbit& orbit, const McmcConfig& cfg,
                                                   std::mt19937_64& rng, const MreOptions& opts) {
  auto xs = unwrap_points<TorusPoint>(data, "mre_monte_carlo[torus]");
  int p = xs.front().size();
  if (orbit.kappa.size() != p || orbit.lambda.size() != p * (p - 1) / 2) {
    throw std::invalid_argument("mre_monte_carlo: orbit size does not match the data");
  }
  // Parameter-space variant: the posterior over mu is sampled by Gibbs and
  // E P_{(mu, kappa, Lambda)} = mu, so the pushed points are the draws.
  auto trace = gibbs_torus_posterior(xs, orbit.kappa, orbit.lambda, cfg, rng);
  std::vector<ManifoldPoint> pushed;
  pushed.reserve(trace.states.size());
  for (const auto& mu : trace.states) pushed.emplace_back(mu);
  FrechetResult mean = sample_frechet_mean(pushed, MetricKind::Intrinsic, opts.frechet);
  return {mean.mean, make_diagnostics(trace.acceptance_rate,
                                      static_cast<int>(trace.states.size()), mean.converged)};
}

}  // namespace

void validate_orbit(const OrbitLabel& orbit) {
  std::visit(
      [](const auto& o) {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, VmfOrbit>) {
          if (!(o.kappa > 0.0)) throw std::invalid_argument("VmfOrbit: kappa must be positive");
        } else if constexpr (std::is_same_v<T, HyperbolicOrbit>) {
          if (!(o.kappa > 0.0) || !(o.radius > 0.0)) {
            throw std::invalid_argument("HyperbolicOrbit: kappa and radius must be positive");
          }
        } else if constexpr (std::is_same_v<T, LangevinOrbit>) {
          if (!(o.lambda > 0.0)) {
            throw std::invalid_argument("LangevinOrbit: lambda must be positive");
          }
        } else if constexpr (std::is_same_v<T, WishartOrbit>) {
          if (o.eigenvalues.size() < 1) throw std::invalid_argument("WishartOrbit: empty");
          if (o.dof < o.eigenvalues.size()) {
            throw std::invalid_argument("WishartOrbit: dof must be >= p");
          }
          for (int i = 0; i < o.eigenvalues.size(); ++i) {
            if (!(o.eigenvalues(i) > 0.0)) {
              throw std::invalid_argument("WishartOrbit: eigenvalues must be positive");
            }
            if (i > 0 && o.eigenvalues(i) > o.eigenvalues(i - 1) + 1e-12) {
              throw std::invalid_argument("WishartOrbit: eigenvalues must be sorted descending");
            }
          }
        } else {
          for (int i = 0; i < o.kappa.size(); ++i) {
            if (!(o.kappa(i) > 0.0)) {
              throw std::invalid_argument("TorusOrbit: kappa must be positive");
            }
          }
          int p = static_cast<int>(o.kappa.size());
          if (o.lambda.size() != p * (p - 1) / 2) {
            throw std::invalid_argument("TorusOrbit: lambda size mismatch");
          }
        }
      },
      orbit);
}

UnitVector mre_vmf_closed_form(const std::vector<UnitVector>& data, MetricKind /*loss*/) {
  if (data.empty()) throw std::invalid_argument("mre_vmf_closed_form: empty data");
  Vec s = Vec::Zero(data.front().ambient_dim());
  for (const auto& x : data) s += x.coords();
  if (s.norm() < 1e-12) {
    throw std::runtime_error("mre_vmf_closed_form: resultant vanishes, MRE undefined");
  }
  return UnitVector::normalized(s);
}

HyperboloidPoint mre_hyperbolic_closed_form(const std::vector<HyperboloidPoint>& data) {
  if (data.empty()) throw std::invalid_argument("mre_hyperbolic_closed_form: empty data");
  double radius = data.front().radius();
  Vec s = Vec::Zero(data.front().ambient_dim());
  for (const auto& x : data) s += x.coords();
  double form = minkowski_inner(s, s);
  if (form >= -1e-12) {
    throw std::runtime_error("mre_hyperbolic_closed_form: resultant is not timelike");
  }
  return HyperboloidPoint(s * (radius / std::sqrt(-form)), radius);
}

StiefelFrame mre_langevin_single_obs(const std::vector<StiefelFrame>& data) {
  if (data.size() != 1) {
    throw std::invalid_argument("mre_langevin_single_obs: defined only for a single observation");
  }
  return data.front();
}

std::pair<ManifoldPoint, MreDiagnostics> mre_monte_carlo(const std::vector<ManifoldPoint>& data,
                                                         const OrbitLabel& orbit,
                                                         const McmcConfig& cfg,
                                                         std::mt19937_64& rng,
                                                         const MreOptions& opts) {
  validate_orbit(orbit);
  if (data.empty()) throw std::invalid_argument("mre_monte_carlo: empty data");
  return std::visit(
      [&](const auto& o) -> std::pair<ManifoldPoint, MreDiagnostics> {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, VmfOrbit>) {
          return mre_vmf(data, o, cfg, rng, opts);
        } else if constexpr (std::is_same_v<T, HyperbolicOrbit>) {
          return mre_hyperbolic(data, o, cfg, rng, opts);
        } else if constexpr (std::is_same_v<T, LangevinOrbit>) {
          return mre_langevin(data, o, cfg, rng, opts);
        } else if constexpr (std::is_same_v<T, WishartOrbit>) {
          return mre_wishart(data, o, cfg, rng, opts);
        } else {
          return mre_torus(data, o, cfg, rng, opts);
        }
      },
      orbit);
}

// White Wishart(dof, I) draw from the Bartlett factor.
static Mat white_wishart(int p, int dof, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Mat a = Mat::Zero(p, p);
  for (int i = 0; i < p; ++i) {
    std::chi_squared_distribution<double> chi2(static_cast<double>(dof - i));
    a(i, i) = std::sqrt(chi2(rng));
    for (int l = 0; l < i; ++l) a(i, l) = gauss(rng);
  }
  return a * a.transpose();
}

SpdMatrix wishart_mle_frechet(const SpdMatrix& x, int dof, int n_mc, std::mt19937_64& rng) {
  if (n_mc < 1) throw std::invalid_argument("wishart_mle_frechet: n_mc must be >= 1");
  int p = x.dim();
  if (dof < p) throw std::invalid_argument("wishart_mle_frechet: dof must be >= p");
  // Work in the eigenframe of X. There E log(Y/n) is diagonal (conjugating a
  // white Wishart by a sign matrix leaves its law unchanged), so only the
  // diagonal of the log average is kept; this removes the off-diagonal Monte
  // Carlo noise and makes the estimator exactly O(p)-equivariant under
  // matched seeds, up to the eigensolver's rounding.
  Eigen::SelfAdjointEigenSolver<Mat> eig(x.entries());
  Vec half = (eig.eigenvalues() / static_cast<double>(dof)).cwiseSqrt();
  Vec acc = Vec::Zero(p);
  for (int j = 0; j < n_mc; ++j) {
    Mat y = half.asDiagonal() * white_wishart(p, dof, rng) * half.asDiagonal();
    acc += matrix_log(SpdMatrix(0.5 * (y + y.transpose()))).diagonal();
  }
  acc = acc / static_cast<double>(n_mc) -
        Vec::Constant(p, std::log(static_cast<double>(dof)));  // mean of log(Y/n)
  Mat out = eig.eigenvectors() * acc.array().exp().matrix().asDiagonal() *
            eig.eigenvectors().transpose();
  return SpdMatrix(0.5 * (out + out.transpose()));
}

WishartMomResult wishart_mom_orbit(const SpdMatrix& x, int dof, int n_mc, std::mt19937_64& rng) {
  if (n_mc < 2) throw std::invalid_argument("wishart_mom_orbit: n_mc must be >= 2");
  int p = x.dim();
  if (dof < p) throw std::invalid_argument("wishart_mom_orbit: dof must be >= p");
  // Common random numbers: fixed Wishart(dof, I) factors reused across the
  // fixed-point iterations.
  std::vector<Mat> white(n_mc);
  for (int j = 0; j < n_mc; ++j) white[j] = white_wishart(p, dof, rng);
  Eigen::SelfAdjointEigenSolver<Mat> xe(x.entries() / static_cast<double>(dof));
  Vec target = xe.eigenvalues().reverse().array().log().matrix();
  // eigs of the log mean, sorted descending, as a function of log Sigma eigs.
  auto map_log_eigs = [&](const Vec& log_d) {
    Vec half = (0.5 * log_d.array()).exp().matrix();
    Mat acc = Mat::Zero(p, p);
    for (const Mat& w : white) {
      Mat y = half.asDiagonal() * w * half.asDiagonal() / static_cast<double>(dof);
      acc += matrix_log(SpdMatrix(0.5 * (y + y.transpose())));
    }
    acc /= static_cast<double>(n_mc);
    Eigen::SelfAdjointEigenSolver<Mat> es(acc, Eigen::EigenvaluesOnly);
    return Vec(es.eigenvalues().reverse());
  };
  Vec log_d = target;
  Vec f = map_log_eigs(log_d);
  double residual = (f - target).norm();
  int iter = 0;
  const int max_fixed_point = 40;
  for (; iter < max_fixed_point && residual > 1e-9 * std::max(1.0, target.norm()); ++iter) {
    Vec candidate = log_d + (target - f);
    Vec fc = map_log_eigs(candidate);
    double rc = (fc - target).norm();
    if (rc < residual) {
      log_d = candidate;
      f = fc;
      residual = rc;
      continue;
    }
    // Damped steps, then a finite-difference Newton solve if they stall.
    bool improved = false;
    for (double damp : {0.5, 0.25}) {
      Vec cd = log_d + damp * (target - f);
      Vec fd = map_log_eigs(cd);
      double rd = (fd - target).norm();
      if (rd < residual) {
        log_d = cd;
        f = fd;
        residual = rd;
        improved = true;
        break;
      }
    }
    if (improved) continue;
    Mat jac(p, p);
    const double h = 1e-5;
    for (int c = 0; c < p; ++c) {
      Vec bumped = log_d;
      bumped(c) += h;
      jac.col(c) = (map_log_eigs(bumped) - f) / h;
    }
    Vec step = jac.colPivHouseholderQr().solve(target - f);
    Vec cn = log_d + step;
    Vec fn = map_log_eigs(cn);
    double rn = (fn - target).norm();
    if (rn >= residual) break;  // no further progress
    log_d = cn;
    f = fn;
    residual = rn;
  }
  WishartMomResult out{WishartOrbit{log_d.array().exp().matrix(), dof}, residual, false, iter};
  std::sort(out.orbit.eigenvalues.data(), out.orbit.eigenvalues.data() + p,
            std::greater<double>());
  out.converged = residual <= 0.05 * std::max(1e-8, target.norm());
  return out;
}

// ---------------------------------------------------------------------------
// Torus maximum likelihood

namespace {

struct TorusAscent {
  Vec b;
  double value;
  bool converged;
};

// Log likelihood in mu (normalizer dropped) and its angle gradient.
double torus_mu_objective(const Mat& angles, const Vec& kappa, const Vec& lambda, const Vec& b,
                          Vec* grad) {
  int n = static_cast<int>(angles.rows());
  int p = static_cast<int>(angles.cols());
  double value = 0.0;
  if (grad) grad->setZero();
  Mat sin_d(n, p), cos_d(n, p);
  for (int r = 0; r < n; ++r) {
    for (int i = 0; i < p; ++i) {
      double d = angles(r, i) - b(i);
      sin_d(r, i) = std::sin(d);
      cos_d(r, i) = std::cos(d);
    }
  }
  for (int r = 0; r < n; ++r) {
    for (int i = 0; i < p; ++i) {
      value += kappa(i) * cos_d(r, i);
      if (grad) (*grad)(i) += kappa(i) * sin_d(r, i);
      for (int j = i + 1; j < p; ++j) {
        double lam = lambda(torus_pair_index(i, j, p));
        value += lam * sin_d(r, i) * sin_d(r, j);
        if (grad) {
          (*grad)(i) -= lam * cos_d(r, i) * sin_d(r, j);
          (*grad)(j) -= lam * sin_d(r, i) * cos_d(r, j);
        }
      }
    }
  }
  return value;
}

TorusAscent torus_mu_ascent(const Mat& angles, const Vec& kappa, const Vec& lambda, Vec b,
                            const TorusMleOptions& opts) {
  int n = static_cast<int>(angles.rows());
  Vec grad(b.size());
  double value = torus_mu_objective(angles, kappa, lambda, b, &grad);
  bool converged = false;
  double grad_tol = opts.inner_tol * n * std::max(1.0, kappa.maxCoeff());
  for (int iter = 0; iter < opts.inner_max_iters; ++iter) {
    if (grad.cwiseAbs().maxCoeff() < grad_tol) {
      converged = true;
      break;
    }
    double step = 1.0 / (n * (kappa.maxCoeff() + lambda.cwiseAbs().sum() + 1.0));
    double g2 = grad.squaredNorm();
    bool moved = false;
    for (int halvings = 0; halvings < 40; ++halvings) {
      Vec cand = b + step * grad;
      double cv = torus_mu_objective(angles, kappa, lambda, cand, nullptr);
      if (cv > value + 1e-4 * step * g2) {
        b = cand;
        value = torus_mu_objective(angles, kappa, lambda, b, &grad);
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) {
      converged = grad.cwiseAbs().maxCoeff() < 1e3 * grad_tol;
      break;
    }
  }
  return {b, value, converged};
}

TorusAscent torus_mu_profile(const Mat& angles, const Vec& kappa, const Vec& lambda,
                             const Vec& base, const TorusMleOptions& opts) {
  int p = static_cast<int>(angles.cols());
  std::vector<double> offsets = {0.0, std::numbers::pi};
  if (opts.wide_multistart && p <= 3) {
    offsets.push_back(0.5 * std::numbers::pi);
    offsets.push_back(-0.5 * std::numbers::pi);
  }
  int n_off = static_cast<int>(offsets.size());
  long combos = 1;
  for (int i = 0; i < p; ++i) combos *= n_off;
  TorusAscent best{base, -std::numeric_limits<double>::infinity(), false};
  for (long c = 0; c < combos; ++c) {
    Vec start = base;
    long rem = c;
    for (int i = 0; i < p; ++i) {
      start(i) += offsets[rem % n_off];
      rem /= n_off;
    }
    TorusAscent a = torus_mu_ascent(angles, kappa, lambda, start, opts);
    if (a.value > best.value) best = a;
  }
  return best;
}

}  // namespace

TorusMleResult torus_mle(const std::vector<TorusPoint>& data, const TorusMleOptions& opts) {
  if (data.size() < 2) throw std::invalid_argument("torus_mle: need at least 2 observations");
  int p = data.front().size();
  if (p > 4) throw std::invalid_argument("torus_mle: p > 4 is not supported");
  int n = static_cast<int>(data.size());
  Mat angles(n, p);
  for (int r = 0; r < n; ++r) {
    if (data[r].size() != p) throw std::invalid_argument("torus_mle: inconsistent dimensions");
    for (int i = 0; i < p; ++i) angles(r, i) = data[r].angle(i);
  }
  // Per-component circular means and concentration initial values.
  Vec base(p), kappa0(p);
  for (int i = 0; i < p; ++i) {
    double sc = 0.0, ss = 0.0;
    for (int r = 0; r < n; ++r) {
      sc += std::cos(angles(r, i));
      ss += std::sin(angles(r, i));
    }
    base(i) = std::atan2(ss, sc);
    double rbar = std::sqrt(sc * sc + ss * ss) / n;
    rbar = std::min(rbar, 0.999);
    double k = rbar * (2.0 - rbar * rbar) / std::max(1e-6, 1.0 - rbar * rbar);
    kappa0(i) = std::clamp(k, 0.05, 50.0);
  }
  int q = p * (p - 1) / 2;
  Vec z0(p + q);
  z0.head(p) = kappa0.array().log();
  z0.tail(q).setZero();

  auto profile = [&](const Vec& z) -> double {
    if (z.cwiseAbs().maxCoeff() > 8.0) return 1e100;  // keep the search in a sane box
    Vec kappa = z.head(p).array().exp();
    Vec lambda = z.tail(q);
    TorusAscent inner = torus_mu_profile(angles, kappa, lambda, base, opts);
    double logz = torus_log_normalizer(kappa, lambda, p, opts.quad_resolution);
    return -(inner.value - n * logz);
  };
  detail::NelderMeadResult nm =
      detail::nelder_mead_minimize(profile, z0, 0.5, opts.outer_tol, opts.outer_max_evals);
  Vec kappa = nm.x.head(p).array().exp();
  Vec lambda = nm.x.tail(q);
  TorusAscent inner = torus_mu_profile(angles, kappa, lambda, base, opts);
  TorusMleResult out{
      TorusModelParams(TorusPoint::from_angles(inner.b), kappa, lambda),
      -nm.value,
      nm.converged && inner.converged,
  };
  return out;
}

// ---------------------------------------------------------------------------
// Adaptive MRE

OrbitEstimator wishart_mle_orbit_estimator(int dof) {
  return [dof](const std::vector<ManifoldPoint>& data, std::mt19937_64&) -> OrbitLabel {
    auto xs = unwrap_points<SpdMatrix>(data, "wishart_mle_orbit_estimator");
    Mat acc = Mat::Zero(xs.front().dim(), xs.front().dim());
    for (const auto& x : xs) acc += x.entries();
    acc /= static_cast<double>(xs.size()) * dof;
    Eigen::SelfAdjointEigenSolver<Mat> es(acc, Eigen::EigenvaluesOnly);
    return WishartOrbit{Vec(es.eigenvalues().reverse()), dof};
  };
}

OrbitEstimator wishart_mom_orbit_estimator(int dof, int n_mc) {
  return [dof, n_mc](const std::vector<ManifoldPoint>& data, std::mt19937_64& rng) -> OrbitLabel {
    auto xs = unwrap_points<SpdMatrix>(data, "wishart_mom_orbit_estimator");
    if (xs.size() != 1) {
      throw std::invalid_argument("wishart_mom_orbit_estimator: expects a single observation");
    }
    WishartMomResult mom = wishart_mom_orbit(xs.front(), dof, n_mc, rng);
    if (!mom.converged) {
      throw std::runtime_error("wishart_mom_orbit_estimator: moment equation did not converge");
    }
    return mom.orbit;
  };
}

OrbitEstimator torus_mle_orbit_estimator(TorusMleOptions opts) {
  return [opts](const std::vector<ManifoldPoint>& data, std::mt19937_64&) -> OrbitLabel {
    auto xs = unwrap_points<TorusPoint>(data, "torus_mle_orbit_estimator");
    TorusMleResult mle = torus_mle(xs, opts);
    return TorusOrbit{mle.params.kappa, mle.params.lambda};
  };
}

OrbitEstimator fixed_orbit_estimator(OrbitLabel orbit) {
  validate_orbit(orbit);
  return [orbit](const std::vector<ManifoldPoint>&, std::mt19937_64&) -> OrbitLabel {
    return orbit;
  };
}

AdaptiveMreResult adaptive_mre(const std::vector<ManifoldPoint>& data,
                               const OrbitEstimator& orbit_estimator, const McmcConfig& cfg,
                               std::mt19937_64& rng, const MreOptions& opts) {
  OrbitLabel orbit = orbit_estimator(data, rng);
  auto [estimate, diag] = mre_monte_carlo(data, orbit, cfg, rng, opts);
  return AdaptiveMreResult{std::move(estimate), std::move(orbit), diag};
}

}  // namespace fmre
