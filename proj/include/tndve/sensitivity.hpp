#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "tndve/data.hpp"
#include "tndve/estimate.hpp"
#include "tndve/inference.hpp"

namespace tndve {

// q(X) of the tilt OR2(X) = exp(eta q(X)) OR1(X): a constant, or one
// covariate column.
struct TiltFunction {
  enum class Kind { Constant, Covariate } kind = Kind::Constant;
  double constant = 1.0;
  std::size_t column = 0;

  static TiltFunction constant_value(double c);
  static TiltFunction covariate(std::size_t column);
  // Looks the column up among the dataset's covariate names.
  static TiltFunction covariate(const TndDataset& data, const std::string& name);

  Eigen::VectorXd evaluate(const TndDataset& data) const;
  std::string describe() const;
};

struct TiltSpec {
  TiltFunction q;
  std::vector<double> grid{0.0};

  void validate() const;  // nonempty, finite, strictly increasing
};

// k equally spaced points from -omega to omega (k = 1 gives {0}).
std::vector<double> tilt_grid(double omega, int points = 41);

// Per-record weights exp(eta q(X)).
Eigen::VectorXd tilt_weights(const TndDataset& data, const TiltFunction& q, double eta);

// sum V Y* / sum V (1 - Y*) exp(eta q(X)) mu0/(1 - mu0). eta = 0 gives the
// plain outcome-model estimate.
EstimateResult estimate_tilted(const TndDataset& data, const DesignSpec& spec, const TiltFunction& q, double eta);

struct CurveOptions {
  CiMethod ci = CiMethod::Sandwich;
  double level = 0.95;
  CiScale scale = CiScale::Natural;
  BootstrapOptions bootstrap;
  unsigned workers = 1;  // grid points in parallel
};

struct CurvePoint {
  double eta = 0.0;
  std::optional<EstimateResult> result;
  std::string error;  // set when the point failed
};

// One tilted estimate per grid value, in grid order. eta is treated as known
// in the interval. A failing point carries its error and the curve goes on.
std::vector<CurvePoint> sensitivity_curve(const TndDataset& data, const DesignSpec& spec, const TiltSpec& tilt,
                                          const CurveOptions& options = {});

}  // namespace tndve
