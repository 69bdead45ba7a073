#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>

namespace tndve {

inline double expit(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  double e = std::exp(t);
  return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

// log(1 + e^t) without overflow.
inline double log1pexp(double t) { return t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

// Finite-difference step used for every numeric derivative in the library.
inline double fd_step(double value) { return 1e-6 * std::max(1.0, std::abs(value)); }

using VectorFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

// Central-difference Jacobian of f at theta.
Eigen::MatrixXd numeric_jacobian(const VectorFn& f, const Eigen::VectorXd& theta);

struct RootOptions {
  double tolerance = 1e-8;  // max-norm of the residual
  int max_iterations = 100;
  double damping = 0.5;
  int max_halvings = 40;
};

struct RootResult {
  Eigen::VectorXd theta;
  double residual_norm = 0.0;
  int iterations = 0;
};

// Damped Newton iteration on a square system f(theta) = 0 with a numeric
// Jacobian. The step is scaled by `damping` while the residual norm grows.
// Throws NotConverged or SingularJacobian. When the system is
// one-dimensional and Newton stalls, falls back to bracketing the root.
RootResult solve_moment(const VectorFn& f, Eigen::VectorXd theta0, const RootOptions& options = {});

// Derivative-free root of a scalar monotone-ish function: expands a bracket
// around x0 and refines with TOMS 748. Throws NotConverged if no sign change
// is found within |x| <= 50.
double bracket_root(const std::function<double(double)>& f, double x0, double tolerance = 1e-8);

// Two-sided standard-normal quantile z_{1-alpha/2} for a confidence level.
double normal_quantile_two_sided(double level);

}  // namespace tndve
