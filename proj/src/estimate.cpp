#include "tndve/estimate.hpp"

#include <array>
#include <utility>

#include "tndve/errors.hpp"
#include "tndve/estimators_cohort.hpp"
#include "tndve/estimators_tnd.hpp"

namespace tndve {

namespace {

constexpr std::array<std::pair<Estimator, std::string_view>, 8> kLabels{{
    {Estimator::TndLogit, "logit"},
    {Estimator::TndOm, "om"},
    {Estimator::TndIpw, "ipw"},
    {Estimator::TndDr, "dr"},
    {Estimator::DidOm, "did-om"},
    {Estimator::DidIpw, "did-ipw"},
    {Estimator::Standardized, "standardized"},
    {Estimator::UdidDr, "udid-dr"},
}};

}  // namespace

std::string_view estimator_label(Estimator e) noexcept {
  for (const auto& [k, label] : kLabels)
    if (k == e) return label;
  return "unknown";
}

Estimator parse_estimator(std::string_view label) {
  for (const auto& [k, name] : kLabels)
    if (name == label) return k;
  throw Error(ErrorCode::Config, "unknown estimator '" + std::string(label) + "'");
}

bool is_tnd_estimator(Estimator e) noexcept {
  return e == Estimator::TndLogit || e == Estimator::TndOm || e == Estimator::TndIpw || e == Estimator::TndDr;
}

DesignSpec default_design(Estimator e, std::size_t covariate_dim) {
  switch (e) {
    case Estimator::TndLogit:
      return DesignSpec::main_effects(covariate_dim);
    case Estimator::TndIpw:
    case Estimator::DidIpw:
    case Estimator::UdidDr:
      return DesignSpec::covariates_only(covariate_dim);
    default:
      return DesignSpec::interacted(covariate_dim);
  }
}

EstimateResult estimate(const TndDataset& data, Estimator e, const DesignSpec& spec) {
  switch (e) {
    case Estimator::TndLogit:
      return estimate_tnd_logit(data, spec);
    case Estimator::TndOm:
      return estimate_tnd_om(data, spec);
    case Estimator::TndIpw:
      return estimate_tnd_ipw(data, spec);
    case Estimator::TndDr:
      return estimate_tnd_dr(data, spec);
    default:
      throw Error(ErrorCode::Config,
                  "estimator '" + std::string(estimator_label(e)) + "' needs cohort data, not a TND sample");
  }
}

EstimateResult estimate(const CohortDataset& data, Estimator e, const DesignSpec& spec, const CohortOptions& options) {
  switch (e) {
    case Estimator::DidOm:
      return estimate_cohort_did_om(data, spec, options);
    case Estimator::DidIpw:
      return estimate_cohort_did_ipw(data, spec);
    case Estimator::Standardized:
      return estimate_standardized(data, spec);
    case Estimator::UdidDr:
      return estimate_cohort_udid_dr(data, spec);
    default:
      // TND estimators on a cohort use its tested subsample.
      return estimate(restrict_to_tested(data), e, spec);
  }
}

}  // namespace tndve
