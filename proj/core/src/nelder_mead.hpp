#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <functional>
#include <vector>

namespace fmre::detail {

struct NelderMeadResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int evaluations = 0;
  bool converged = false;
};

// Plain Nelder-Mead simplex minimizer. Good enough for the low-dimensional
// profile-likelihood searches here; not meant as a general optimizer.
inline NelderMeadResult nelder_mead_minimize(const std::function<double(const Eigen::VectorXd&)>& f,
                                             Eigen::VectorXd x0, double initial_step, double tol,
                                             int max_evals) {
  const int n = static_cast<int>(x0.size());
  NelderMeadResult result;
  std::vector<Eigen::VectorXd> simplex(n + 1, x0);
  std::vector<double> value(n + 1);
  for (int i = 0; i < n; ++i) simplex[i + 1](i) += initial_step;
  for (int i = 0; i <= n; ++i) value[i] = f(simplex[i]);
  result.evaluations = n + 1;

  auto order = [&]() {
    std::vector<int> idx(n + 1);
    for (int i = 0; i <= n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return value[a] < value[b]; });
    std::vector<Eigen::VectorXd> s2(n + 1);
    std::vector<double> v2(n + 1);
    for (int i = 0; i <= n; ++i) {
      s2[i] = simplex[idx[i]];
      v2[i] = value[idx[i]];
    }
    simplex.swap(s2);
    value.swap(v2);
  };

  while (result.evaluations < max_evals) {
    order();
    double spread = value[n] - value[0];
    double diameter = 0.0;
    for (int i = 1; i <= n; ++i) diameter = std::max(diameter, (simplex[i] - simplex[0]).norm());
    if (spread < tol * (std::abs(value[0]) + tol) && diameter < 10.0 * tol) {
      result.converged = true;
      break;
    }
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) centroid += simplex[i];
    centroid /= static_cast<double>(n);

    Eigen::VectorXd reflected = centroid + (centroid - simplex[n]);
    double fr = f(reflected);
    ++result.evaluations;
    if (fr < value[0]) {
      Eigen::VectorXd expanded = centroid + 2.0 * (centroid - simplex[n]);
      double fe = f(expanded);
      ++result.evaluations;
      if (fe < fr) {
        simplex[n] = expanded;
        value[n] = fe;
      } else {
        simplex[n] = reflected;
        value[n] = fr;
      }
    } else if (fr < value[n - 1]) {
      simplex[n] = reflected;
      value[n] = fr;
    } else {
      Eigen::VectorXd contracted = centroid + 0.5 * (simplex[n] - centroid);
      double fc = f(contracted);
      ++result.evaluations;
      if (fc < value[n]) {
        simplex[n] = contracted;
        value[n] = fc;
      } else {
        for (int i = 1; i <= n; ++i) {
          simplex[i] = simplex[0] + 0.5 * (simplex[i] - simplex[0]);
          value[i] = f(simplex[i]);
        }
        result.evaluations += n;
      }
    }
  }
  order();
  result.x = simplex[0];
  result.value = value[0];
  return result;
}

}  // namespace fmre::detail
