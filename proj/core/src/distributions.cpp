#include "fmre/distributions.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fmre {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

const Eigen::Matrix2d& quarter_turn() {
  static const Eigen::Matrix2d r = (Eigen::Matrix2d() << 0.0, -1.0, 1.0, 0.0).finished();
  return r;
}

double factor_det(const Eigen::Matrix2d& f) {
  return f(0, 0) * f(1, 1) - f(0, 1) * f(1, 0);
}

double beta_draw(double a, double b, std::mt19937_64& rng) {
  std::gamma_distribution<double> ga(a, 1.0);
  std::gamma_distribution<double> gb(b, 1.0);
  double x = ga(rng);
  double y = gb(rng);
  return x / (x + y);
}

// Unit tangent direction at mu, uniform on the tangent sphere.
Vec random_tangent_direction(const UnitVector& mu, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  int d = mu.ambient_dim();
  Vec v(d);
  double n = 0.0;
  do {
    for (int i = 0; i < d; ++i) v(i) = gauss(rng);
    v -= v.dot(mu.coords()) * mu.coords();
    n = v.norm();
  } while (n < 1e-12);
  return v / n;
}

}  // namespace

// ---------------------------------------------------------------------------
// Parameter types

VmfParams::VmfParams(UnitVector mu_, double kappa_) : mu(std::move(mu_)), kappa(kappa_) {
  if (!(kappa > 0.0)) throw std::invalid_argument("VmfParams: kappa must be positive");
}

HyperbolicParams::HyperbolicParams(HyperboloidPoint mu_, double kappa_)
    : mu(std::move(mu_)), kappa(kappa_) {
  if (!(kappa > 0.0)) throw std::invalid_argument("HyperbolicParams: kappa must be positive");
}

LangevinParams::LangevinParams(StiefelFrame h_, double lambda_)
    : h(std::move(h_)), lambda(lambda_) {
  if (!(lambda > 0.0)) throw std::invalid_argument("LangevinParams: lambda must be positive");
}

WishartParams::WishartParams(int dof_, SpdMatrix sigma_) : dof(dof_), sigma(std::move(sigma_)) {
  if (dof < sigma.dim()) throw std::invalid_argument("WishartParams: dof must be >= p");
}

TorusModelParams::TorusModelParams(TorusPoint mu_, Vec kappa_, Vec lambda_)
    : mu(std::move(mu_)), kappa(std::move(kappa_)), lambda(std::move(lambda_)) {
  int p = mu.size();
  if (kappa.size() != p) throw std::invalid_argument("TorusModelParams: kappa size mismatch");
  if (lambda.size() != p * (p - 1) / 2) {
    throw std::invalid_argument("TorusModelParams: lambda size mismatch");
  }
  for (int i = 0; i < p; ++i) {
    if (!(kappa(i) > 0.0)) throw std::invalid_argument("TorusModelParams: kappa must be positive");
  }
}

int torus_pair_index(int i, int j, int p) {
  if (i < 0 || j <= i || j >= p) throw std::invalid_argument("torus_pair_index: need 0 <= i < j < p");
  return i * p - i * (i + 1) / 2 + (j - i - 1);
}

// ---------------------------------------------------------------------------
// Densities

double vmf_log_density(const UnitVector& x, const VmfParams& params) {
  if (x.ambient_dim() != params.mu.ambient_dim()) {
    throw std::invalid_argument("vmf_log_density: dimension mismatch");
  }
  return params.kappa * x.coords().dot(params.mu.coords());
}

double hyperbolic_log_density(const HyperboloidPoint& x, const HyperbolicParams& params) {
  if (x.ambient_dim() != params.mu.ambient_dim()) {
    throw std::invalid_argument("hyperbolic_log_density: dimension mismatch");
  }
  double r2 = params.radius() * params.radius();
  return params.kappa * minkowski_inner(x.coords(), params.mu.coords()) / r2;
}

double langevin_log_density(const StiefelFrame& x, const LangevinParams& params) {
  if (x.rows() != params.h.rows() || x.cols() != params.h.cols()) {
    throw std::invalid_argument("langevin_log_density: shape mismatch");
  }
  return params.lambda * (x.entries().transpose() * params.h.entries()).trace();
}

double wishart_log_density(const SpdMatrix& x, const WishartParams& params) {
  int p = params.sigma.dim();
  if (x.dim() != p) throw std::invalid_argument("wishart_log_density: dimension mismatch");
  Eigen::LLT<Mat> llt(params.sigma.entries());
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("wishart_log_density: sigma is not positive definite");
  }
  double logdet_sigma = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  double trace_term = llt.solve(x.entries()).trace();
  Eigen::LLT<Mat> lltx(x.entries());
  double logdet_x = 2.0 * lltx.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return 0.5 * ((params.dof - p - 1) * logdet_x - trace_term - params.dof * logdet_sigma);
}

double torus_log_density_unnormalized(const TorusPoint& x, const TorusModelParams& params) {
  int p = params.size();
  if (x.size() != p) throw std::invalid_argument("torus_log_density: dimension mismatch");
  const Eigen::Matrix2d& r = quarter_turn();
  double s = 0.0;
  Eigen::Matrix2Xd rmu(2, p);
  for (int i = 0; i < p; ++i) {
    s += params.kappa(i) * x.component(i).dot(params.mu.component(i));
    rmu.col(i) = r * params.mu.component(i);
  }
  for (int i = 0; i < p; ++i) {
    double si = x.component(i).dot(rmu.col(i));
    for (int j = i + 1; j < p; ++j) {
      s += params.lambda(torus_pair_index(i, j, p)) * si * x.component(j).dot(rmu.col(j));
    }
  }
  return s;
}

double model_log_density(const ManifoldPoint& x, const ModelParams& params) {
  return std::visit(
      [](const auto& xx, const auto& pp) -> double {
        using X = std::decay_t<decltype(xx)>;
        using P = std::decay_t<decltype(pp)>;
        if constexpr (std::is_same_v<X, UnitVector> && std::is_same_v<P, VmfParams>) {
          return vmf_log_density(xx, pp);
        } else if constexpr (std::is_same_v<X, HyperboloidPoint> &&
                             std::is_same_v<P, HyperbolicParams>) {
          return hyperbolic_log_density(xx, pp);
        } else if constexpr (std::is_same_v<X, StiefelFrame> &&
                             std::is_same_v<P, LangevinParams>) {
          return langevin_log_density(xx, pp);
        } else if constexpr (std::is_same_v<X, SpdMatrix> && std::is_same_v<P, WishartParams>) {
          return wishart_log_density(xx, pp);
        } else if constexpr (std::is_same_v<X, TorusPoint> &&
                             std::is_same_v<P, TorusModelParams>) {
          return torus_log_density_unnormalized(xx, pp);
        } else {
          throw std::invalid_argument("model_log_density: point does not match family");
        }
      },
      x, params);
}

ModelParams transform_params(const Isometry& g, const ModelParams& params) {
  return std::visit(
      [&g](const auto& pp) -> ModelParams {
        using P = std::decay_t<decltype(pp)>;
        if constexpr (std::is_same_v<P, VmfParams>) {
          return VmfParams(apply_isometry(std::get<OrthogonalMap>(g), pp.mu), pp.kappa);
        } else if constexpr (std::is_same_v<P, HyperbolicParams>) {
          return HyperbolicParams(apply_isometry(std::get<LorentzMap>(g), pp.mu), pp.kappa);
        } else if constexpr (std::is_same_v<P, LangevinParams>) {
          return LangevinParams(apply_isometry(std::get<StiefelPair>(g), pp.h), pp.lambda);
        } else if constexpr (std::is_same_v<P, WishartParams>) {
          return WishartParams(pp.dof, apply_isometry(std::get<SpdConjugation>(g), pp.sigma));
        } else {
          const auto& tg = std::get<TorusMap>(g);
          int p = pp.size();
          Vec lambda = pp.lambda;
          for (int i = 0; i < p; ++i) {
            for (int j = i + 1; j < p; ++j) {
              double sign = factor_det(tg.factors[i]) * factor_det(tg.factors[j]);
              lambda(torus_pair_index(i, j, p)) *= sign >= 0.0 ? 1.0 : -1.0;
            }
          }
          return TorusModelParams(apply_isometry(tg, pp.mu), pp.kappa, std::move(lambda));
        }
      },
      params);
}

// ---------------------------------------------------------------------------
// Samplers

UnitVector vmf_sample(const VmfParams& params, std::mt19937_64& rng) {
  int m = params.mu.ambient_dim();
  double kappa = params.kappa;
  // Tangent-normal decomposition: the cosine w = x . mu has density
  // ~ exp(kappa w)(1-w^2)^{(m-3)/2}; rejection envelope after Wood (1994).
  double dm1 = static_cast<double>(m - 1);
  double b = (-2.0 * kappa + std::sqrt(4.0 * kappa * kappa + dm1 * dm1)) / dm1;
  double x0 = (1.0 - b) / (1.0 + b);
  double c = kappa * x0 + dm1 * std::log1p(-x0 * x0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double w = 0.0;
  for (;;) {
    double z = beta_draw(0.5 * dm1, 0.5 * dm1, rng);
    w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
    double u = unif(rng);
    if (kappa * w + dm1 * std::log1p(-x0 * w) - c >= std::log(u)) break;
  }
  Vec v = random_tangent_direction(params.mu, rng);
  Vec x = w * params.mu.coords() + std::sqrt(std::max(0.0, 1.0 - w * w)) * v;
  return UnitVector::normalized(x);
}

HyperboloidPoint hyperbolic_sample(const HyperbolicParams& params, std::mt19937_64& rng) {
  int k = params.mu.ambient_dim() - 1;
  double kappa = params.kappa;
  double r = params.radius();
  // Radial density in u = distance / R: f(u) ~ exp(-kappa cosh u) sinh^{k-1} u.
  auto log_f = [kappa, k](double u) {
    double lf = -kappa * std::cosh(u);
    if (k > 1) lf += (k - 1) * std::log(std::sinh(u));
    return lf;
  };
  double mode = 0.0;
  if (k > 1) {
    double km1 = static_cast<double>(k - 1);
    mode = std::acosh((km1 + std::sqrt(km1 * km1 + 4.0 * kappa * kappa)) / (2.0 * kappa));
  }
  double lf_mode = k > 1 ? log_f(mode) : -kappa;
  // Tangent line to the concave log density right of the mode gives the
  // shifted-exponential tail of the envelope.
  double curvature = kappa * std::cosh(mode);
  if (k > 1) {
    double sh = std::sinh(std::max(mode, 1e-8));
    curvature += (k - 1) / (sh * sh);
  }
  double u0 = mode + 1.0 / std::sqrt(curvature + 1e-12);
  double slope = -kappa * std::sinh(u0) + (k > 1 ? (k - 1) / std::tanh(u0) : 0.0);
  if (slope >= 0.0) slope = -1e-8;
  double uc = u0 + (lf_mode - log_f(u0)) / slope;
  uc = std::max(uc, mode);
  // Envelope masses relative to exp(lf_mode): flat part on (0, uc], tail beyond.
  double mass_flat = uc;
  double mass_tail = 1.0 / (-slope);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::exponential_distribution<double> expo(-slope);
  double u = 0.0;
  for (;;) {
    double log_env;
    if (unif(rng) * (mass_flat + mass_tail) < mass_flat) {
      u = uc * unif(rng);
      log_env = lf_mode;
    } else {
      u = uc + expo(rng);
      log_env = lf_mode + slope * (u - uc);
    }
    if (u <= 0.0) continue;
    if (std::log(unif(rng)) < log_f(u) - log_env) break;
  }
  // Point at distance R*u from the apex, then translate the apex to mu.
  Vec dir(k);
  if (k == 1) {
    dir(0) = unif(rng) < 0.5 ? -1.0 : 1.0;
  } else {
    dir = uniform_on_sphere(k - 1, rng).coords();
  }
  Vec y(k + 1);
  y.head(k) = r * std::sinh(u) * dir;
  y(k) = r * std::cosh(u);
  HyperboloidPoint at_apex(std::move(y), r);
  return apply_isometry(lorentz_translation_to(params.mu), at_apex);
}

StiefelFrame langevin_sample(const LangevinParams& params, std::mt19937_64& rng,
                             LangevinSampleStats* stats) {
  int p = params.h.rows();
  int k = params.h.cols();
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  long long attempts = 0;
  for (;;) {
    StiefelFrame x = uniform_on_stiefel(p, k, rng);
    ++attempts;
    if (stats) ++stats->proposals;
    double log_acc =
        params.lambda * ((x.entries().transpose() * params.h.entries()).trace() - k);
    if (std::log(unif(rng)) < log_acc) {
      if (stats) ++stats->accepted;
      return x;
    }
    if (attempts >= 20000) {
      throw std::runtime_error(
          "langevin_sample: acceptance rate below 1e-4; use a smaller lambda");
    }
  }
}

SpdMatrix wishart_sample(const WishartParams& params, std::mt19937_64& rng) {
  int p = params.sigma.dim();
  Eigen::LLT<Mat> llt(params.sigma.entries());
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("wishart_sample: sigma is not positive definite");
  }
  std::normal_distribution<double> gauss(0.0, 1.0);
  Mat a = Mat::Zero(p, p);
  for (int i = 0; i < p; ++i) {
    std::chi_squared_distribution<double> chi2(static_cast<double>(params.dof - i));
    a(i, i) = std::sqrt(chi2(rng));
    for (int j = 0; j < i; ++j) a(i, j) = gauss(rng);
  }
  Mat m = llt.matrixL() * a;
  Mat x = m * m.transpose();
  return SpdMatrix(0.5 * (x + x.transpose()));
}

TorusConditional torus_conditional_vmf(int i, const TorusPoint& x,
                                       const TorusModelParams& params) {
  int p = params.size();
  if (x.size() != p) throw std::invalid_argument("torus_conditional_vmf: dimension mismatch");
  if (i < 0 || i >= p) throw std::invalid_argument("torus_conditional_vmf: index out of range");
  const Eigen::Matrix2d& r = quarter_turn();
  Eigen::Vector2d rmu_i = r * params.mu.component(i);
  Eigen::Vector2d eta = params.kappa(i) * params.mu.component(i);
  for (int j = 0; j < p; ++j) {
    if (j == i) continue;
    double lam = params.lambda(torus_pair_index(std::min(i, j), std::max(i, j), p));
    Eigen::Vector2d rmu_j = r * params.mu.component(j);
    eta += lam * rmu_j.dot(x.component(j)) * rmu_i;
  }
  TorusConditional out;
  double n = eta.norm();
  if (n < 1e-12) {
    out.direction = params.mu.component(i);
    out.kappa = 0.0;
    out.degenerate = true;
  } else {
    out.direction = eta / n;
    out.kappa = n;
  }
  return out;
}

TorusPoint torus_gibbs_sample(const TorusModelParams& params, int n_sweeps,
                              std::mt19937_64& rng) {
  int p = params.size();
  Eigen::Matrix2Xd state = params.mu.components();
  std::uniform_real_distribution<double> unif_angle(0.0, kTwoPi);
  for (int sweep = 0; sweep < n_sweeps; ++sweep) {
    for (int i = 0; i < p; ++i) {
      TorusPoint current(state);
      TorusConditional cond = torus_conditional_vmf(i, current, params);
      if (cond.degenerate) {
        double a = unif_angle(rng);
        state.col(i) << std::cos(a), std::sin(a);
      } else {
        VmfParams vp(UnitVector(cond.direction), cond.kappa);
        state.col(i) = vmf_sample(vp, rng).coords();
      }
    }
  }
  return TorusPoint(std::move(state));
}

std::vector<TorusPoint> torus_sample_iid(const TorusModelParams& params, int n,
                                         std::mt19937_64& rng, int burn_in_sweeps) {
  std::vector<TorusPoint> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) out.push_back(torus_gibbs_sample(params, burn_in_sweeps, rng));
  return out;
}

double torus_log_normalizer(const Vec& kappa, const Vec& lambda, int p, int resolution) {
  if (p < 1 || p > 4) {
    throw std::invalid_argument("torus_log_normalizer: only p <= 4 is supported");
  }
  if (kappa.size() != p || lambda.size() != p * (p - 1) / 2) {
    throw std::invalid_argument("torus_log_normalizer: parameter size mismatch");
  }
  if (resolution < 4) throw std::invalid_argument("torus_log_normalizer: resolution too small");
  int m = resolution;
  Vec cosg(m), sing(m);
  for (int t = 0; t < m; ++t) {
    double a = kTwoPi * t / m;
    cosg(t) = std::cos(a);
    sing(t) = std::sin(a);
  }
  // With mu = 0 the interaction reduces to lambda_ij sin(a_i) sin(a_j).
  double bound = kappa.sum() + lambda.cwiseAbs().sum();
  double sum = 0.0;
  std::vector<int> idx(p, 0);
  for (;;) {
    double s = 0.0;
    for (int i = 0; i < p; ++i) s += kappa(i) * cosg(idx[i]);
    for (int i = 0; i < p; ++i) {
      for (int j = i + 1; j < p; ++j) {
        s += lambda(torus_pair_index(i, j, p)) * sing(idx[i]) * sing(idx[j]);
      }
    }
    sum += std::exp(s - bound);
    int axis = 0;
    while (axis < p && ++idx[axis] == m) {
      idx[axis] = 0;
      ++axis;
    }
    if (axis == p) break;
  }
  return std::log(sum) + bound + p * std::log(kTwoPi / m);
}

// ---------------------------------------------------------------------------
// Generic sampling

ManifoldPoint sample_point(const ModelParams& params, std::mt19937_64& rng) {
  return std::visit(
      [&rng](const auto& pp) -> ManifoldPoint {
        using P = std::decay_t<decltype(pp)>;
        if constexpr (std::is_same_v<P, VmfParams>) {
          return vmf_sample(pp, rng);
        } else if constexpr (std::is_same_v<P, HyperbolicParams>) {
          return hyperbolic_sample(pp, rng);
        } else if constexpr (std::is_same_v<P, LangevinParams>) {
          return langevin_sample(pp, rng);
        } else if constexpr (std::is_same_v<P, WishartParams>) {
          return wishart_sample(pp, rng);
        } else {
          return torus_gibbs_sample(pp, 50, rng);
        }
      },
      params);
}

std::vector<ManifoldPoint> sample_points(const ModelParams& params, int n,
                                         std::mt19937_64& rng) {
  std::vector<ManifoldPoint> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) out.push_back(sample_point(params, rng));
  return out;
}

}  // namespace fmre
