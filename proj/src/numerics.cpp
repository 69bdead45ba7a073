#include "tndve/numerics.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/tools/roots.hpp>

#include "tndve/errors.hpp"

namespace tndve {

Eigen::MatrixXd numeric_jacobian(const VectorFn& f, const Eigen::VectorXd& theta) {
  Eigen::VectorXd probe = theta;
  Eigen::MatrixXd jac;
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    const double h = fd_step(theta[j]);
    probe[j] = theta[j] + h;
    Eigen::VectorXd up = f(probe);
    probe[j] = theta[j] - h;
    Eigen::VectorXd down = f(probe);
    probe[j] = theta[j];
    if (j == 0) jac.resize(up.size(), theta.size());
    jac.col(j) = (up - down) / (2.0 * h);
  }
  return jac;
}

namespace {

double max_abs(const Eigen::VectorXd& r) { return r.size() ? r.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

RootResult solve_moment(const VectorFn& f, Eigen::VectorXd theta, const RootOptions& options) {
  Eigen::VectorXd r = f(theta);
  double norm = max_abs(r);
  int iter = 0;
  for (; iter < options.max_iterations && !(norm <= options.tolerance); ++iter) {
    Eigen::MatrixXd jac = numeric_jacobian(f, theta);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
    if (!lu.isInvertible() || !jac.allFinite()) {
      if (theta.size() == 1) break;
      throw Error(ErrorCode::SingularJacobian, "moment Jacobian is singular");
    }
    Eigen::VectorXd step = lu.solve(r);
    double scale = 1.0;
    Eigen::VectorXd candidate = theta - step;
    Eigen::VectorXd rc = f(candidate);
    double nc = max_abs(rc);
    for (int h = 0; h < options.max_halvings && !(nc < norm); ++h) {
      scale *= options.damping;
      candidate = theta - scale * step;
      rc = f(candidate);
      nc = max_abs(rc);
    }
    if (!(nc < norm)) break;  // no descent; Newton has stalled
    theta = std::move(candidate);
    r = std::move(rc);
    norm = nc;
  }
  if (!(norm <= options.tolerance) && theta.size() == 1) {
    auto scalar = [&](double t) { return f(Eigen::VectorXd::Constant(1, t))[0]; };
    double root = bracket_root(scalar, theta[0], options.tolerance);
    theta[0] = root;
    norm = std::abs(scalar(root));
  }
  if (norm <= options.tolerance && norm > 0.0) {
    Eigen::MatrixXd jac = numeric_jacobian(f, theta);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
    if (lu.isInvertible() && jac.allFinite()) {
      Eigen::VectorXd candidate = theta - lu.solve(f(theta));
      double nc = max_abs(f(candidate));
      if (nc < norm) {
        theta = std::move(candidate);
        norm = nc;
      }
    }
  }
  if (!(norm <= options.tolerance))
    throw Error(ErrorCode::NotConverged,
                "moment residual " + std::to_string(norm) + " after " + std::to_string(iter) + " iterations");
  return RootResult{std::move(theta), norm, iter};
}

double bracket_root(const std::function<double(double)>& f, double x0, double tolerance) {
  double lo = x0, hi = x0;
  double flo = f(lo), fhi = flo;
  if (flo == 0.0) return x0;
  for (double width = 0.25; width <= 64.0; width *= 2.0) {
    lo = x0 - width;
    hi = x0 + width;
    flo = f(lo);
    fhi = f(hi);
    if (std::signbit(flo) != std::signbit(fhi)) break;
  }
  if (std::signbit(flo) == std::signbit(fhi))
    throw Error(ErrorCode::NotConverged, "no sign change bracketing the root");
  std::uintmax_t max_iter = 200;
  auto stop = [](double a, double b) { return std::abs(b - a) <= 1e-15 * std::max(1.0, std::abs(a)); };
  auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, stop, max_iter);
  double fa = std::abs(f(a)), fb = std::abs(f(b));
  double root = fa <= fb ? a : b;
  if (std::min(fa, fb) > tolerance)
    throw Error(ErrorCode::NotConverged, "bracketed root residual above tolerance");
  return root;
}

double normal_quantile_two_sided(double level) {
  if (!(level > 0.0 && level < 1.0)) throw Error(ErrorCode::Config, "confidence level must lie in (0,1)");
  static const boost::math::normal standard;
  return boost::math::quantile(standard, 1.0 - (1.0 - level) / 2.0);
}

}  // namespace tndve
