#pragma once

#include <Eigen/Dense>

#include "tndve/data.hpp"
#include "tndve/estimate.hpp"
#include "tndve/glm.hpp"

namespace tndve {

// Odds of Y=2 versus Y=1 among the unvaccinated, mu_{2,0}(X)/mu_{1,0}(X),
// for every record. By default from a logistic fit of 1(Y=2) on `spec` among
// the tested; with options.multinomial_ratio from a multinomial fit of Y.
struct OutcomeRatioFit {
  FittedGlm model;
  Eigen::VectorXd ratio;
};
OutcomeRatioFit fit_outcome_ratio(const CohortDataset& data, const DesignSpec& spec, const CohortOptions& options = {});

// pi_1(X) = Pr[V=1 | Y=1, X], logistic on `spec` (treatment-free) among Y=1.
FittedGlm fit_cohort_propensity(const CohortDataset& data, const DesignSpec& spec);

// sum V 1(Y=2) / sum V 1(Y=1) mu_{2,0}(X)/mu_{1,0}(X)
EstimateResult estimate_cohort_did_om(const CohortDataset& data, const DesignSpec& spec,
                                      const CohortOptions& options = {});

// sum V 1(Y=2) / sum (1-V) 1(Y=2) pi_1(X)/(1 - pi_1(X))
EstimateResult estimate_cohort_did_ipw(const CohortDataset& data, const DesignSpec& spec);

// Naive standardization sum_i mu_1(X_i) / sum_i mu_0(X_i), with
// mu_v(X) = Pr[Y=2 | V=v, X] from a multinomial fit of Y on `spec`.
// Which covariates enter (e.g. X alone, or X and U) is chosen by the spec.
EstimateResult estimate_standardized(const CohortDataset& data, const DesignSpec& spec);

// Nuisance bundle of the universal difference-in-differences estimator. All
// functions are linear in basis = spec.without_treatment() rows.
struct UdidNuisance {
  FittedGlm mu_dagger;           // multinomial Pr[Y=y | V=0, X]
  FittedGlm pi_dagger;           // logistic Pr[V=1 | Y=1, X]
  Eigen::VectorXd eta_initial;   // step 3 normalization solve
  Eigen::VectorXd beta_dr;       // log odds-ratio function beta(y, X), y in {1,2}; beta(0, X) = 0
  Eigen::VectorXd eta_dr;        // step 5 re-solve
  double eta_residual = 0.0;     // max-norm normalization residual at eta_dr
};

UdidNuisance fit_udid_nuisance(const CohortDataset& data, const DesignSpec& basis_spec);

// Per-record xi(X) = e^{beta(1,X)} mu_2(0,X) / E[e^{beta(Y,X)} | V=0, X].
Eigen::VectorXd udid_xi(const Eigen::Ref<const Eigen::MatrixXd>& mu_probs, const Eigen::Ref<const Eigen::VectorXd>& b);

// Mean normalization residual n^-1 sum h(X) [(1-V)(1 + exp(lin)) - 1] with
// lin = scale * h(X)'kappa + offset per record. Step 3 uses scale = 1(Y=0)
// and offset = 1(Y!=0) logit pi(1,X); step 5 uses scale = 1, offset = beta(Y,X).
Eigen::VectorXd udid_normalization(const Eigen::Ref<const Eigen::MatrixXd>& basis, const CohortDataset& data,
                                   const Eigen::Ref<const Eigen::VectorXd>& scale,
                                   const Eigen::Ref<const Eigen::VectorXd>& offset,
                                   const Eigen::Ref<const Eigen::VectorXd>& kappa);

// Mean doubly robust odds-ratio moment for beta (S(Y,X) = 1(Y=1)).
Eigen::VectorXd udid_beta_moment(const Eigen::Ref<const Eigen::MatrixXd>& basis, const CohortDataset& data,
                                 const Eigen::Ref<const Eigen::VectorXd>& eta, const Eigen::Ref<const Eigen::VectorXd>& mu1,
                                 const Eigen::Ref<const Eigen::VectorXd>& beta);

EstimateResult estimate_cohort_udid_dr(const CohortDataset& data, const DesignSpec& spec);

}  // namespace tndve
