#include <doctest.h>

#include "fixtures.hpp"
#include "tndve/errors.hpp"
#include "tndve/estimate.hpp"
#include "tndve/estimators_cohort.hpp"
#include "tndve/estimators_tnd.hpp"
#include "tndve/simulation.hpp"

#include <random>

using namespace tndve;

TEST_CASE("toy TND: every estimator gives the crude odds ratio 3") {
  TndDataset d = fixtures::toy_tnd();
  REQUIRE(d.size() == 8);
  for (Estimator e : {Estimator::TndLogit, Estimator::TndOm, Estimator::TndIpw, Estimator::TndDr}) {
    CAPTURE(estimator_label(e));
    EstimateResult r = estimate(d, e, default_design(e, 0));
    CHECK(r.psi == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(r.ve == doctest::Approx(-2.0).epsilon(1e-10));
  }
}

TEST_CASE("toy cohort: DiD estimators give 3, naive standardization 2") {
  CohortDataset d = fixtures::toy_cohort();
  REQUIRE(d.size() == 20);
  for (Estimator e : {Estimator::DidOm, Estimator::DidIpw, Estimator::UdidDr}) {
    CAPTURE(estimator_label(e));
    CHECK(estimate(d, e, default_design(e, 0)).psi == doctest::Approx(3.0).epsilon(1e-10));
  }
  CHECK(estimate(d, Estimator::Standardized, default_design(Estimator::Standardized, 0)).psi ==
        doctest::Approx(2.0).epsilon(1e-10));
  CohortOptions multi{true};
  CHECK(estimate_cohort_did_om(d, DesignSpec::interacted(0), multi).psi == doctest::Approx(3.0).epsilon(1e-10));
}

TEST_CASE("null cohort gives 1 for every estimator") {
  const int counts[2][3] = {{6, 3, 1}, {12, 6, 2}};
  CohortDataset d = fixtures::cohort_from_counts(counts);
  for (Estimator e : {Estimator::TndLogit, Estimator::TndOm, Estimator::TndIpw, Estimator::TndDr, Estimator::DidOm,
                      Estimator::DidIpw, Estimator::Standardized, Estimator::UdidDr}) {
    CAPTURE(estimator_label(e));
    CHECK(estimate(d, e, default_design(e, 0)).psi == doctest::Approx(1.0).epsilon(1e-10));
  }
}

using fixtures::random_binary_cohort;
using fixtures::stratified_did;

TEST_CASE("saturated binary X: TND estimators on the tested equal the cohort DiD estimator") {
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  for (int rep = 0; rep < 200; ++rep) {
    CohortDataset d = random_binary_cohort(rng);
    TndDataset t = restrict_to_tested(d);
    double did = estimate(d, Estimator::DidOm, DesignSpec::interacted(1)).psi;
    double oracle = stratified_did(d);
    worst = std::max(worst, std::abs(did - oracle) / oracle);
    for (Estimator e : {Estimator::TndOm, Estimator::TndIpw, Estimator::TndDr}) {
      double psi = estimate(t, e, default_design(e, 1)).psi;
      worst = std::max(worst, std::abs(psi - did) / did);
    }
  }
  CHECK(worst <= 1e-8);
}

TEST_CASE("DR odds-ratio moment is solved to 1e-8") {
  GeneratedCohort g = generate_cohort(scenario_params(2), 99, 0);
  TndDataset t = restrict_to_tested(g.observed());
  NuisanceTnd nu = fit_tnd_nuisance(t, DesignSpec::interacted(1));
  DrSolution s = solve_dr_or_function(t, nu);
  Eigen::MatrixXd basis = nu.pi_spec.matrix(t);
  Eigen::VectorXd m = dr_moment(basis, t, nu.mu0(t), nu.pi(t), s.theta);
  CHECK(m.cwiseAbs().maxCoeff() <= 1e-8);
  CHECK(s.residual_norm <= 1e-8);
}

TEST_CASE("UDiD normalization residual is small at the solution") {
  GeneratedCohort g = generate_cohort(scenario_params(8), 5, 0);
  CohortDataset d = g.observed();
  UdidNuisance nu = fit_udid_nuisance(d, DesignSpec::covariates_only(1));
  CHECK(nu.eta_residual <= 1e-8);
}

TEST_CASE("estimators reject degenerate inputs") {
  const int no_vax_cases[2][3] = {{6, 3, 2}, {6, 2, 0}};
  CohortDataset d = fixtures::cohort_from_counts(no_vax_cases);
  TndDataset t = restrict_to_tested(d);
  for (Estimator e : {Estimator::TndOm, Estimator::TndIpw, Estimator::TndDr}) {
    CAPTURE(estimator_label(e));
    try {
      estimate(t, e, default_design(e, 0));
      FAIL("expected an error");
    } catch (const Error& err) {
      CHECK(err.code() == ErrorCode::DegenerateEstimand);
    }
  }
  CHECK_THROWS_AS(estimate(TndDataset(0, {}), Estimator::TndOm, default_design(Estimator::TndOm, 0)), Error);
  CHECK_THROWS_AS(estimate(d, Estimator::Standardized, DesignSpec::covariates_only(0)), Error);
}
