#pragma once

#include "fmre/distributions.hpp"
#include "fmre/manifolds.hpp"

#include <random>
#include <vector>

namespace fmre {

/// Which distance a solver or loss uses. Intrinsic is the canonical metric
/// of each space (geodesic on sphere/hyperboloid, log-Euclidean on SPD,
/// product-angular on the torus, Frobenius on Stiefel frames, the only one
/// in scope there). Extrinsic selects the chordal/Frobenius embedding
/// distance where one exists.
enum class MetricKind { Intrinsic, Extrinsic };

struct FrechetSolverConfig {
  int max_iters = 200;
  double tol = 1e-10;     // step-norm convergence threshold
  double step_size = 1.0; // relaxation factor for the gradient step
};

struct FrechetResult {
  ManifoldPoint mean;
  double objective = 0.0;
  bool converged = false;
  int iterations = 0;
};

/// Distance between two points of the same manifold variant.
double manifold_distance(const ManifoldPoint& x, const ManifoldPoint& y,
                         MetricKind metric = MetricKind::Intrinsic);

/// Sample Frechet mean of a homogeneous list of points. SPD uses the closed
/// log-Euclidean form, the torus uses exact per-circle means, Stiefel frames
/// use the polar projection of the entrywise average, and sphere/hyperboloid
/// run intrinsic gradient descent.
FrechetResult sample_frechet_mean(const std::vector<ManifoldPoint>& points,
                                  MetricKind metric = MetricKind::Intrinsic,
                                  const FrechetSolverConfig& cfg = {});

/// Exact global minimizer of the mean squared angular distance on the
/// circle. Evaluates the n branch-cut candidates between consecutive sorted
/// observations; ties are broken by the smallest angle. Returns an angle in
/// [0, 2pi).
double circle_frechet_mean(const std::vector<double>& angles);

/// Monte-Carlo estimate of the population Frechet mean: the sample Frechet
/// mean of n_draws fresh draws from the model.
FrechetResult population_frechet_mean_mc(const ModelParams& params, MetricKind metric,
                                         int n_draws, std::mt19937_64& rng,
                                         const FrechetSolverConfig& cfg = {});

}  // namespace fmre
