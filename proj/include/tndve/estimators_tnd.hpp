#pragma once

#include <Eigen/Dense>

#include "tndve/data.hpp"
#include "tndve/estimate.hpp"
#include "tndve/glm.hpp"
#include "tndve/numerics.hpp"

namespace tndve {

// Vaccinated-by-outcome cell counts n[v][y_star].
struct TndCounts {
  double n[2][2] = {{0, 0}, {0, 0}};
};
TndCounts count_cells(const TndDataset& data);

// Fitted nuisance functions of the TND estimators.
//   mu:  Pr[Y*=1 | V, X] from a pooled logistic fit on `mu_spec`
//   pi0: Pr[V=1 | Y*=0, X] from a logistic fit among test-negatives on `pi_spec`
struct NuisanceTnd {
  DesignSpec mu_spec;
  FittedGlm mu;
  DesignSpec pi_spec;
  FittedGlm pi0;

  Eigen::VectorXd mu0(const TndDataset& data) const;  // mu at V = 0, per record
  Eigen::VectorXd pi(const TndDataset& data) const;   // pi0, per record
};

FittedGlm fit_tnd_outcome(const TndDataset& data, const DesignSpec& spec);
FittedGlm fit_tnd_propensity(const TndDataset& data, const DesignSpec& spec);
NuisanceTnd fit_tnd_nuisance(const TndDataset& data, const DesignSpec& outcome_spec);

// Conventional estimator: exp of the V coefficient of a logistic regression
// of Y* on the design (which must contain V).
EstimateResult estimate_tnd_logit(const TndDataset& data, const DesignSpec& spec);

// Outcome-modeling plug-in:
//   sum V Y* / sum V (1 - Y*) w mu0/(1 - mu0),
// w = 1 unless per-record weights are given.
EstimateResult estimate_tnd_om(const TndDataset& data, const DesignSpec& spec,
                               const Eigen::VectorXd* weights = nullptr);

// Inverse-probability-weighting plug-in:
//   sum V Y* / sum (1 - V) Y* pi0/(1 - pi0),
// with pi0 fit on spec.without_treatment() among test-negatives.
EstimateResult estimate_tnd_ipw(const TndDataset& data, const DesignSpec& spec);

struct DrSolution {
  Eigen::VectorXd theta;  // coefficients of the log odds-ratio function on the basis
  double residual_norm = 0.0;
  int iterations = 0;
};

// Mean doubly robust moment
//   n^-1 sum h(X) (V - pi0) exp(-phi(X) V Y*) (Y* - mu0),  phi(X) = h(X)' theta.
Eigen::VectorXd dr_moment(const Eigen::Ref<const Eigen::MatrixXd>& basis, const TndDataset& data,
                          const Eigen::Ref<const Eigen::VectorXd>& mu0, const Eigen::Ref<const Eigen::VectorXd>& pi0,
                          const Eigen::Ref<const Eigen::VectorXd>& theta);

// Solves the moment above for theta with h(X) = nuisance.pi_spec rows
// (by default (1, X)).
DrSolution solve_dr_or_function(const TndDataset& data, const NuisanceTnd& nuisance,
                                const RootOptions& options = {});

// Doubly robust estimator: sum V Y* / sum V Y* exp(-phi_dr(X)).
EstimateResult estimate_tnd_dr(const TndDataset& data, const DesignSpec& spec);

}  // namespace tndve
