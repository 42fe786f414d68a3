#pragma once

#include "fmre/manifolds.hpp"

#include <random>
#include <variant>
#include <vector>

namespace fmre {

/// von Mises-Fisher on S^k: p(x | mu, kappa) ~ exp(kappa x . mu).
struct VmfParams {
  VmfParams(UnitVector mu_, double kappa_);
  UnitVector mu;
  double kappa;
};

/// Hyperbolic analogue on H^k(R): p(x | kappa, mu) ~ exp(kappa (x,mu)/R^2).
struct HyperbolicParams {
  HyperbolicParams(HyperboloidPoint mu_, double kappa_);
  HyperboloidPoint mu;
  double kappa;
  double radius() const { return mu.radius(); }
};

/// Langevin on V_k(R^p) restricted to theta = lambda H with H a frame.
struct LangevinParams {
  LangevinParams(StiefelFrame h_, double lambda_);
  StiefelFrame h;
  double lambda;
};

/// Wishart_p(dof, sigma), dof >= p so the density exists.
struct WishartParams {
  WishartParams(int dof_, SpdMatrix sigma_);
  int dof;
  SpdMatrix sigma;
};

/// Coupled von Mises-Fisher model on the p-torus. lambda holds the
/// interaction coefficients for pairs i < j in row-major upper-triangle
/// order (see torus_pair_index).
struct TorusModelParams {
  TorusModelParams(TorusPoint mu_, Vec kappa_, Vec lambda_);
  TorusPoint mu;
  Vec kappa;
  Vec lambda;
  int size() const { return mu.size(); }
};

using ModelParams =
    std::variant<VmfParams, HyperbolicParams, LangevinParams, WishartParams, TorusModelParams>;

/// Index of the (i, j) interaction, i < j, in a p-component lambda vector.
int torus_pair_index(int i, int j, int p);

// ---------------------------------------------------------------------------
// Densities (unnormalized log densities w.r.t. the volume measure)

double vmf_log_density(const UnitVector& x, const VmfParams& params);
double hyperbolic_log_density(const HyperboloidPoint& x, const HyperbolicParams& params);
double langevin_log_density(const StiefelFrame& x, const LangevinParams& params);
/// Includes the x-dependent determinant term; normalization constant dropped.
double wishart_log_density(const SpdMatrix& x, const WishartParams& params);
double torus_log_density_unnormalized(const TorusPoint& x, const TorusModelParams& params);

/// Unnormalized log density of x under params; dispatches on the variants.
double model_log_density(const ManifoldPoint& x, const ModelParams& params);

/// Action of an isometry on the parameter space. For the torus model a
/// reflection of component i flips the sign of every lambda_{ij}.
ModelParams transform_params(const Isometry& g, const ModelParams& params);

// ---------------------------------------------------------------------------
// Exact samplers

UnitVector vmf_sample(const VmfParams& params, std::mt19937_64& rng);
HyperboloidPoint hyperbolic_sample(const HyperbolicParams& params, std::mt19937_64& rng);

struct LangevinSampleStats {
  long long proposals = 0;
  long long accepted = 0;
  double acceptance_rate() const {
    return proposals > 0 ? static_cast<double>(accepted) / static_cast<double>(proposals) : 0.0;
  }
};
/// Rejection sampler with uniform proposals and the bound etr(lambda x^T H)
/// <= exp(lambda k). Throws if the observed acceptance rate falls below 1e-4.
StiefelFrame langevin_sample(const LangevinParams& params, std::mt19937_64& rng,
                             LangevinSampleStats* stats = nullptr);

/// Bartlett-decomposition Wishart draw.
SpdMatrix wishart_sample(const WishartParams& params, std::mt19937_64& rng);

/// Parameters of the S^1 von Mises-Fisher conditional of component i given
/// the others. When the natural parameter vanishes the conditional is
/// uniform and `degenerate` is set.
struct TorusConditional {
  Eigen::Vector2d direction;
  double kappa = 0.0;
  bool degenerate = false;
};
TorusConditional torus_conditional_vmf(int i, const TorusPoint& x,
                                       const TorusModelParams& params);

/// Systematic-scan Gibbs sweeps starting from mu; returns the state after
/// n_sweeps sweeps.
TorusPoint torus_gibbs_sample(const TorusModelParams& params, int n_sweeps,
                              std::mt19937_64& rng);

/// Independent draws, each from a fresh chain with burn_in_sweeps sweeps.
std::vector<TorusPoint> torus_sample_iid(const TorusModelParams& params, int n,
                                         std::mt19937_64& rng, int burn_in_sweeps = 50);

/// log of the normalizing constant of the torus model by tensor-product
/// trapezoid quadrature with `resolution` nodes per axis. Independent of mu;
/// computed at mu = 0. Supported for p <= 4.
double torus_log_normalizer(const Vec& kappa, const Vec& lambda, int p, int resolution = 64);

// ---------------------------------------------------------------------------
// Generic sampling

ManifoldPoint sample_point(const ModelParams& params, std::mt19937_64& rng);
std::vector<ManifoldPoint> sample_points(const ModelParams& params, int n, std::mt19937_64& rng);

}  // namespace fmre
