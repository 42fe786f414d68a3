#include "fmre/frechet.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fmre {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double pair_distance(const ManifoldPoint& x, const ManifoldPoint& y, MetricKind metric);

double mean_squared_distance(const std::vector<ManifoldPoint>& points, const ManifoldPoint& m,
                             MetricKind metric) {
  double s = 0.0;
  for (const auto& x : points) {
    double d = pair_distance(x, m, metric);
    s += d * d;
  }
  return s / static_cast<double>(points.size());
}

double pair_distance(const ManifoldPoint& x, const ManifoldPoint& y, MetricKind metric) {
  return std::visit(
      [metric](const auto& a, const auto& b) -> double {
        using A = std::decay_t<decltype(a)>;
        using B = std::decay_t<decltype(b)>;
        if constexpr (!std::is_same_v<A, B>) {
          throw std::invalid_argument("manifold_distance: variant mismatch");
        } else if constexpr (std::is_same_v<A, UnitVector>) {
          return metric == MetricKind::Extrinsic ? sphere_extrinsic_distance(a, b)
                                                 : sphere_distance(a, b);
        } else if constexpr (std::is_same_v<A, HyperboloidPoint>) {
          if (metric == MetricKind::Extrinsic) {
            throw std::invalid_argument("manifold_distance: no extrinsic hyperboloid metric");
          }
          return hyperboloid_distance(a, b);
        } else if constexpr (std::is_same_v<A, TorusPoint>) {
          if (metric == MetricKind::Extrinsic) {
            throw std::invalid_argument("manifold_distance: no extrinsic torus metric");
          }
          return torus_distance(a, b);
        } else if constexpr (std::is_same_v<A, SpdMatrix>) {
          if (metric == MetricKind::Extrinsic) {
            throw std::invalid_argument("manifold_distance: no extrinsic SPD metric");
          }
          return log_euclidean_distance(a, b);
        } else {
          return stiefel_extrinsic_distance(a, b);
        }
      },
      x, y);
}

FrechetResult finish(const std::vector<ManifoldPoint>& points, ManifoldPoint mean,
                     MetricKind metric, bool converged, int iterations) {
  double objective = mean_squared_distance(points, mean, metric);
  return FrechetResult{std::move(mean), objective, converged, iterations};
}

FrechetResult sphere_mean(const std::vector<ManifoldPoint>& points, MetricKind metric,
                          const FrechetSolverConfig& cfg) {
  int d = std::get<UnitVector>(points.front()).ambient_dim();
  Vec sum = Vec::Zero(d);
  for (const auto& p : points) sum += std::get<UnitVector>(p).coords();
  if (metric == MetricKind::Extrinsic) {
    // Chordal metric: the minimizer is the normalized Euclidean average.
    if (sum.norm() < 1e-12) {
      return finish(points, points.front(), metric, false, 0);
    }
    return finish(points, UnitVector::normalized(sum), metric, true, 0);
  }
  UnitVector x = sum.norm() >= 1e-12 ? UnitVector::normalized(sum)
                                     : std::get<UnitVector>(points.front());
  bool converged = false;
  int iters = 0;
  for (; iters < cfg.max_iters; ++iters) {
    Vec grad = Vec::Zero(d);
    for (const auto& p : points) grad += sphere_log(x, std::get<UnitVector>(p));
    grad /= static_cast<double>(points.size());
    Vec step = cfg.step_size * grad;
    if (step.norm() < cfg.tol) {
      converged = true;
      break;
    }
    x = sphere_exp(x, step);
  }
  return finish(points, x, metric, converged, iters);
}

FrechetResult hyperboloid_mean(const std::vector<ManifoldPoint>& points, MetricKind metric,
                               const FrechetSolverConfig& cfg) {
  const auto& first = std::get<HyperboloidPoint>(points.front());
  int d = first.ambient_dim();
  double r = first.radius();
  Vec sum = Vec::Zero(d);
  for (const auto& p : points) sum += std::get<HyperboloidPoint>(p).coords();
  sum /= static_cast<double>(points.size());
  // The Euclidean average of upper-sheet points stays timelike, so the
  // Minkowski normalization is always defined.
  double form = minkowski_inner(sum, sum);
  HyperboloidPoint x(sum * (r / std::sqrt(-form)), r);
  bool converged = false;
  int iters = 0;
  for (; iters < cfg.max_iters; ++iters) {
    Vec grad = Vec::Zero(d);
    for (const auto& p : points) grad += hyperboloid_log(x, std::get<HyperboloidPoint>(p));
    grad /= static_cast<double>(points.size());
    Vec step = cfg.step_size * grad;
    double step_norm = std::sqrt(std::max(minkowski_inner(step, step), 0.0));
    if (step_norm < cfg.tol) {
      converged = true;
      break;
    }
    x = hyperboloid_exp(x, step);
  }
  return finish(points, x, metric, converged, iters);
}

FrechetResult spd_mean(const std::vector<ManifoldPoint>& points, MetricKind metric) {
  const auto& first = std::get<SpdMatrix>(points.front());
  Mat acc = Mat::Zero(first.dim(), first.dim());
  for (const auto& p : points) acc += matrix_log(std::get<SpdMatrix>(p));
  acc /= static_cast<double>(points.size());
  return finish(points, matrix_exp(acc), metric, true, 0);
}

FrechetResult torus_mean(const std::vector<ManifoldPoint>& points, MetricKind metric) {
  const auto& first = std::get<TorusPoint>(points.front());
  int p = first.size();
  Vec angles(p);
  std::vector<double> component(points.size());
  for (int i = 0; i < p; ++i) {
    for (std::size_t r = 0; r < points.size(); ++r) {
      component[r] = std::get<TorusPoint>(points[r]).angle(i);
    }
    angles(i) = circle_frechet_mean(component);
  }
  return finish(points, TorusPoint::from_angles(angles), metric, true, 0);
}

FrechetResult stiefel_mean(const std::vector<ManifoldPoint>& points, MetricKind metric) {
  const auto& first = std::get<StiefelFrame>(points.front());
  Mat acc = Mat::Zero(first.rows(), first.cols());
  for (const auto& p : points) acc += std::get<StiefelFrame>(p).entries();
  acc /= static_cast<double>(points.size());
  Eigen::JacobiSVD<Mat> svd(acc, Eigen::ComputeThinU | Eigen::ComputeThinV);
  bool unique = svd.singularValues().minCoeff() > 1e-12;
  StiefelFrame mean(svd.matrixU() * svd.matrixV().transpose());
  return finish(points, mean, metric, unique, 0);
}

}  // namespace

double manifold_distance(const ManifoldPoint& x, const ManifoldPoint& y, MetricKind metric) {
  return pair_distance(x, y, metric);
}

FrechetResult sample_frechet_mean(const std::vector<ManifoldPoint>& points, MetricKind metric,
                                  const FrechetSolverConfig& cfg) {
  if (points.empty()) throw std::invalid_argument("sample_frechet_mean: empty input");
  std::size_t tag = points.front().index();
  for (const auto& p : points) {
    if (p.index() != tag) {
      throw std::invalid_argument("sample_frechet_mean: mixed manifold variants");
    }
  }
  if (std::holds_alternative<UnitVector>(points.front())) return sphere_mean(points, metric, cfg);
  if (std::holds_alternative<HyperboloidPoint>(points.front())) {
    return hyperboloid_mean(points, metric, cfg);
  }
  if (std::holds_alternative<SpdMatrix>(points.front())) return spd_mean(points, metric);
  if (std::holds_alternative<TorusPoint>(points.front())) return torus_mean(points, metric);
  return stiefel_mean(points, metric);
}

double circle_frechet_mean(const std::vector<double>& angles) {
  if (angles.empty()) throw std::invalid_argument("circle_frechet_mean: empty input");
  std::size_t n = angles.size();
  std::vector<double> a(n);
  for (std::size_t i = 0; i < n; ++i) {
    double v = std::fmod(angles[i], kTwoPi);
    if (v < 0.0) v += kTwoPi;
    a[i] = v;
  }
  std::sort(a.begin(), a.end());
  double total = 0.0;
  for (double v : a) total += v;
  auto objective = [&a, n](double c) {
    double s = 0.0;
    for (double v : a) {
      double d = circle_distance(v, c);
      s += d * d;
    }
    return s / static_cast<double>(n);
  };
  double best_angle = 0.0;
  double best_obj = std::numeric_limits<double>::infinity();
  // Candidate j lifts the j smallest observations by one turn, which is the
  // stationary point of the objective for a branch cut in that gap.
  for (std::size_t j = 0; j < n; ++j) {
    double lifted = total + kTwoPi * static_cast<double>(j);
    double c = std::fmod(lifted / static_cast<double>(n), kTwoPi);
    if (c < 0.0) c += kTwoPi;
    double obj = objective(c);
    if (obj < best_obj - 1e-12 ||
        (std::abs(obj - best_obj) <= 1e-12 && c < best_angle)) {
      best_obj = obj;
      best_angle = c;
    }
  }
  return best_angle;
}

FrechetResult population_frechet_mean_mc(const ModelParams& params, MetricKind metric,
                                         int n_draws, std::mt19937_64& rng,
                                         const FrechetSolverConfig& cfg) {
  if (n_draws < 1) throw std::invalid_argument("population_frechet_mean_mc: n_draws must be >= 1");
  std::vector<ManifoldPoint> draws = sample_points(params, n_draws, rng);
  return sample_frechet_mean(draws, metric, cfg);
}

}  // namespace fmre
