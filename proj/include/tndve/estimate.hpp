#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tndve/data.hpp"
#include "tndve/glm.hpp"

namespace tndve {

struct ConfidenceInterval {
  double lower = 0.0;
  double upper = 0.0;
};

struct NuisanceDiagnostic {
  std::string model;
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;
};

// Point estimate of the risk ratio among the vaccinated (psi) and VE = 1 - psi.
struct EstimateResult {
  double psi = 0.0;
  double ve = 0.0;
  std::optional<double> se;
  std::optional<ConfidenceInterval> ci;
  std::string method;
  std::size_t n = 0;
  std::vector<NuisanceDiagnostic> diagnostics;
};

enum class Estimator {
  TndLogit,
  TndOm,
  TndIpw,
  TndDr,
  DidOm,
  DidIpw,
  Standardized,
  UdidDr,
};

std::string_view estimator_label(Estimator e) noexcept;
// Accepts the CLI labels: logit, om, ipw, dr, did-om, did-ipw, standardized, udid-dr.
Estimator parse_estimator(std::string_view label);
bool is_tnd_estimator(Estimator e) noexcept;

// Regressors each estimator uses by default:
//   logit            (1, V, X)
//   om, dr, did-om, standardized   (1, V, X, V*X); dr/udid use the (1, X) part for
//                    the propensity and odds-ratio functions
//   ipw, did-ipw, udid-dr          (1, X)
DesignSpec default_design(Estimator e, std::size_t covariate_dim);

struct CohortOptions {
  // did-om: estimate mu_{2,0}/mu_{1,0} from a multinomial fit of Y on the
  // full sample instead of a logistic fit of 1(Y=2) among the tested.
  bool multinomial_ratio = false;
};

EstimateResult estimate(const TndDataset& data, Estimator e, const DesignSpec& spec);
EstimateResult estimate(const CohortDataset& data, Estimator e, const DesignSpec& spec,
                        const CohortOptions& options = {});

}  // namespace tndve
