#pragma once

#include "fmre/distributions.hpp"
#include "fmre/frechet.hpp"
#include "fmre/manifolds.hpp"
#include "fmre/mcmc.hpp"

#include <functional>
#include <random>
#include <utility>
#include <variant>
#include <vector>

namespace fmre {

// ---------------------------------------------------------------------------
// Orbit labels: the invariant coordinates of a parameter-space orbit.

struct VmfOrbit {
  double kappa;
};

struct HyperbolicOrbit {
  double kappa;
  double radius;
};

struct LangevinOrbit {
  double lambda;
};

/// Eigenvalues of Sigma, sorted descending. `dof` is the known Wishart
/// degree of freedom of the model, carried along for convenience; it is not
/// an orbit coordinate.
struct WishartOrbit {
  Vec eigenvalues;
  int dof;
};

struct TorusOrbit {
  Vec kappa;
  Vec lambda;
};

using OrbitLabel = std::variant<VmfOrbit, HyperbolicOrbit, LangevinOrbit, WishartOrbit, TorusOrbit>;

void validate_orbit(const OrbitLabel& orbit);

struct MreDiagnostics {
  double acceptance_rate = 0.0;
  int chain_length = 0;
  bool frechet_converged = false;
};

struct MreOptions {
  // Monte-Carlo size for population Frechet means where no closed form
  // exists (Wishart step (1)).
  int population_mean_draws = 20000;
  FrechetSolverConfig frechet{};
};

// ---------------------------------------------------------------------------
// Closed-form MREs

/// S_n / ||S_n||. The MRE is the same under the intrinsic and the extrinsic
/// loss; the flag only documents which loss the caller had in mind.
UnitVector mre_vmf_closed_form(const std::vector<UnitVector>& data,
                               MetricKind loss = MetricKind::Intrinsic);

/// R S_n / sqrt(-(S_n, S_n)).
HyperboloidPoint mre_hyperbolic_closed_form(const std::vector<HyperboloidPoint>& data);

/// For a single Langevin observation the MRE of H is X itself.
StiefelFrame mre_langevin_single_obs(const std::vector<StiefelFrame>& data);

// ---------------------------------------------------------------------------
// Monte-Carlo MRE

/// Monte-Carlo minimum risk equivariant estimator on the given orbit:
/// (1) population mean at a canonical orbit representative, (2) MCMC over
/// the group (or the parameter space where the two coincide), (3) push the
/// population mean through the retained elements, (4) sample Frechet mean.
/// Compact groups default to uniform-Haar independence proposals; the
/// hyperbolic location and the scalar Wishart scale use geodesic /
/// log-scale random walks since their groups are not compact.
std::pair<ManifoldPoint, MreDiagnostics> mre_monte_carlo(const std::vector<ManifoldPoint>& data,
                                                         const OrbitLabel& orbit,
                                                         const McmcConfig& cfg,
                                                         std::mt19937_64& rng,
                                                         const MreOptions& opts = {});

// ---------------------------------------------------------------------------
// Wishart estimators

/// MLE of the log-Euclidean Frechet mean of X/n: the population mean of
/// Y/n with Y ~ Wishart(n, X/n), estimated by matrix-log averaging over
/// n_mc draws.
SpdMatrix wishart_mle_frechet(const SpdMatrix& x, int dof, int n_mc, std::mt19937_64& rng);

struct WishartMomResult {
  WishartOrbit orbit;
  double residual = 0.0;  // ||log eigs of the fitted mean - log eigs of X/n||
  bool converged = false;
  int iterations = 0;
};

/// Method-of-moments orbit: solves eigs(log-Euclidean mean of Y/n) =
/// eigs(X/n) for the eigenvalues of Sigma, using common random numbers so
/// the fixed-point map is deterministic, with a numerical-Jacobian Newton
/// fallback.
WishartMomResult wishart_mom_orbit(const SpdMatrix& x, int dof, int n_mc, std::mt19937_64& rng);

// ---------------------------------------------------------------------------
// Torus maximum likelihood

struct TorusMleOptions {
  int quad_resolution = 64;   // per-axis nodes of the normalizer quadrature
  int inner_max_iters = 200;  // mu ascent iterations
  double inner_tol = 1e-9;
  int outer_max_evals = 400;  // profile simplex budget
  double outer_tol = 1e-7;
  bool wide_multistart = true;  // quarter-turn mu starts in addition to the half-turn ones
};

struct TorusMleResult {
  TorusModelParams params;
  double profile_log_lik = 0.0;
  bool converged = false;
};

/// Profile-likelihood MLE: inner gradient ascent over mu with multistart,
/// outer simplex search over (log kappa, Lambda) with the quadrature
/// normalizer. Supported for p <= 4 and n >= 2.
TorusMleResult torus_mle(const std::vector<TorusPoint>& data, const TorusMleOptions& opts = {});

// ---------------------------------------------------------------------------
// Adaptive MRE

using OrbitEstimator = std::function<OrbitLabel(const std::vector<ManifoldPoint>&, std::mt19937_64&)>;

/// Orbit of the Wishart MLE Sigma-hat = X/n (its eigenvalues).
OrbitEstimator wishart_mle_orbit_estimator(int dof);
/// Orbit of Sigma_MoM.
OrbitEstimator wishart_mom_orbit_estimator(int dof, int n_mc);
/// Orbit (kappa-hat, Lambda-hat) of the torus profile MLE.
OrbitEstimator torus_mle_orbit_estimator(TorusMleOptions opts = {});
/// Constant estimator returning a known orbit.
OrbitEstimator fixed_orbit_estimator(OrbitLabel orbit);

struct AdaptiveMreResult {
  ManifoldPoint estimate;
  OrbitLabel orbit;
  MreDiagnostics diagnostics;
};

/// Two-step estimator: invariant orbit estimate, then the Monte-Carlo MRE
/// on that orbit.
AdaptiveMreResult adaptive_mre(const std::vector<ManifoldPoint>& data,
                               const OrbitEstimator& orbit_estimator, const McmcConfig& cfg,
                               std::mt19937_64& rng, const MreOptions& opts = {});

}  // namespace fmre
