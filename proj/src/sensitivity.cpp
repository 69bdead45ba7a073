#include "tndve/sensitivity.hpp"

#include <cmath>

#include "tndve/errors.hpp"
#include "tndve/estimators_tnd.hpp"
#include "tndve/parallel.hpp"

namespace tndve {

TiltFunction TiltFunction::constant_value(double c) {
  if (!std::isfinite(c)) throw Error(ErrorCode::Config, "tilt constant must be finite");
  TiltFunction q;
  q.constant = c;
  return q;
}

TiltFunction TiltFunction::covariate(std::size_t column) {
  TiltFunction q;
  q.kind = Kind::Covariate;
  q.column = column;
  return q;
}

TiltFunction TiltFunction::covariate(const TndDataset& data, const std::string& name) {
  const auto& names = data.covariate_names();
  for (std::size_t k = 0; k < names.size(); ++k)
    if (names[k] == name) return covariate(k);
  throw Error(ErrorCode::Schema, "tilt column '" + name + "' is not a covariate");
}

Eigen::VectorXd TiltFunction::evaluate(const TndDataset& data) const {
  const auto n = static_cast<Eigen::Index>(data.size());
  if (kind == Kind::Constant) return Eigen::VectorXd::Constant(n, constant);
  if (column >= data.covariate_dim())
    throw Error(ErrorCode::DimensionMismatch, "tilt column " + std::to_string(column) + " out of range");
  Eigen::VectorXd q(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    q[i] = data[static_cast<std::size_t>(i)].x[column];
    if (!std::isfinite(q[i])) throw Error(ErrorCode::Value, "tilt function is not finite at record " + std::to_string(i));
  }
  return q;
}

std::string TiltFunction::describe() const {
  if (kind == Kind::Constant) return "constant " + std::to_string(constant);
  return "covariate " + std::to_string(column);
}

void TiltSpec::validate() const {
  if (grid.empty()) throw Error(ErrorCode::Config, "sensitivity grid is empty");
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!std::isfinite(grid[k])) throw Error(ErrorCode::Config, "sensitivity grid value is not finite");
    if (k > 0 && !(grid[k] > grid[k - 1])) throw Error(ErrorCode::Config, "sensitivity grid must be increasing");
  }
}

std::vector<double> tilt_grid(double omega, int points) {
  if (!(omega >= 0.0) || !std::isfinite(omega)) throw Error(ErrorCode::Config, "omega must be finite and >= 0");
  if (points < 1) throw Error(ErrorCode::Config, "grid needs at least one point");
  if (points == 1) return {0.0};
  if (omega == 0.0) throw Error(ErrorCode::Config, "omega = 0 allows a single grid point only");
  std::vector<double> grid(static_cast<std::size_t>(points));
  for (int k = 0; k < points; ++k) grid[static_cast<std::size_t>(k)] = -omega + 2.0 * omega * k / (points - 1);
  // symmetric grids hit 0 exactly
  if (points % 2 == 1) grid[static_cast<std::size_t>(points / 2)] = 0.0;
  return grid;
}

Eigen::VectorXd tilt_weights(const TndDataset& data, const TiltFunction& q, double eta) {
  return (eta * q.evaluate(data).array()).exp();
}

EstimateResult estimate_tilted(const TndDataset& data, const DesignSpec& spec, const TiltFunction& q, double eta) {
  if (!std::isfinite(eta)) throw Error(ErrorCode::Config, "eta must be finite");
  Eigen::VectorXd w = tilt_weights(data, q, eta);
  EstimateResult r = estimate_tnd_om(data, spec, &w);
  if (eta != 0.0) r.method = "tnd-om-tilted";
  return r;
}

std::vector<CurvePoint> sensitivity_curve(const TndDataset& data, const DesignSpec& spec, const TiltSpec& tilt,
                                          const CurveOptions& options) {
  tilt.validate();
  std::vector<CurvePoint> points(tilt.grid.size());
  // bootstrap draws parallelize on their own; do not nest thread pools
  BootstrapOptions boot = options.bootstrap;
  boot.level = options.level;
  boot.scale = options.scale;
  unsigned grid_workers = options.ci == CiMethod::Bootstrap ? 1 : options.workers;
  if (options.ci == CiMethod::Bootstrap && boot.workers <= 1) boot.workers = options.workers;

  parallel_for(points.size(), grid_workers, [&](std::size_t k) {
    CurvePoint& pt = points[k];
    pt.eta = tilt.grid[k];
    try {
      EstimateResult r = estimate_tilted(data, spec, tilt.q, pt.eta);
      if (options.ci == CiMethod::Sandwich) {
        Eigen::VectorXd w = tilt_weights(data, tilt.q, pt.eta);
        CiReport rep = sandwich_ci(stack_tnd_om_weighted(data, spec, w, r.psi), options.level, options.scale);
        r.se = rep.se;
        r.ci = rep.ci;
      } else if (options.ci == CiMethod::Bootstrap) {
        const double eta = pt.eta;
        const TiltFunction q = tilt.q;
        std::function<double(const TndDataset&)> f = [&spec, q, eta](const TndDataset& d) {
          return estimate_tilted(d, spec, q, eta).psi;
        };
        CiReport rep = bootstrap_report(r.psi, bootstrap_draws(data, f, boot), boot);
        r.se = rep.se;
        r.ci = rep.ci;
      }
      pt.result = std::move(r);
    } catch (const Error& e) {
      pt.error = e.what();
    }
  });
  return points;
}

}  // namespace tndve
