#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "tndve/errors.hpp"
#include "tndve/estimate.hpp"
#include "tndve/inference.hpp"
#include "tndve/simulation.hpp"

using namespace tndve;

namespace {

TndDataset scenario_tnd(int scenario, std::uint64_t seed, std::size_t n = 15000) {
  ScenarioParams p = scenario_params(scenario);
  p.n = n;
  return restrict_to_tested(generate_cohort(p, seed, 0).observed());
}

}  // namespace

TEST_CASE("sandwich SE of the crude TND odds ratio matches the Woolf formula") {
  // 2x2 table a = 2 vaccinated cases, b = 2 vaccinated controls, c = 1, d = 3
  TndDataset d = fixtures::toy_tnd();
  const double woolf = 3.0 * std::sqrt(1.0 / 2 + 1.0 / 2 + 1.0 / 1 + 1.0 / 3);
  for (Estimator e : {Estimator::TndLogit, Estimator::TndOm, Estimator::TndIpw, Estimator::TndDr}) {
    CAPTURE(estimator_label(e));
    CiReport r = sandwich_ci(d, e, default_design(e, 0));
    CHECK(r.psi == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(r.se == doctest::Approx(woolf).epsilon(1e-6));
    CHECK(r.ci.lower == doctest::Approx(3.0 - 1.959963984540054 * woolf).epsilon(1e-6));
  }
  CiReport logscale = sandwich_ci(d, Estimator::TndOm, default_design(Estimator::TndOm, 0), 0.95, CiScale::Log);
  const double half = 1.959963984540054 * woolf / 3.0;
  CHECK(logscale.ci.lower == doctest::Approx(3.0 * std::exp(-half)).epsilon(1e-6));
  CHECK(logscale.ci.upper == doctest::Approx(3.0 * std::exp(half)).epsilon(1e-6));
}

TEST_CASE("sandwich meat is positive semidefinite and the stacks solve at the estimate") {
  TndDataset t = scenario_tnd(2, 17);
  for (Estimator e : {Estimator::TndLogit, Estimator::TndOm, Estimator::TndIpw, Estimator::TndDr}) {
    CAPTURE(estimator_label(e));
    StackedEE s = stack_estimator(t, e, default_design(e, 1));
    SandwichParts parts = sandwich_parts(s);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(parts.v2);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-10);
    CHECK((parts.v2 - parts.v2.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(parts.residual_norm <= 1e-8);
    CHECK(s.theta[s.psi_index] == doctest::Approx(estimate(t, e, default_design(e, 1)).psi).epsilon(1e-12));
  }
}

TEST_CASE("numeric bread matches analytic derivatives of the outcome-model stack") {
  TndDataset t = scenario_tnd(2, 23);
  DesignSpec spec = default_design(Estimator::TndOm, 1);
  StackedEE s = stack_estimator(t, Estimator::TndOm, spec);
  SandwichParts parts = sandwich_parts(s);
  const Eigen::Index p = s.psi_index;
  Eigen::MatrixXd d = spec.matrix(t), d0 = spec.matrix(t, 0);
  Eigen::VectorXd beta = s.theta.head(p);
  Eigen::VectorXd eta = d * beta, odds0 = (d0 * beta).array().exp();
  const double n = static_cast<double>(t.size());
  // d/dpsi of mean V(Y* - (1-Y*) odds0 psi) = -mean V(1-Y*) odds0
  double dpsi = 0.0;
  Eigen::RowVectorXd dbeta = Eigen::RowVectorXd::Zero(p);
  Eigen::MatrixXd info = Eigen::MatrixXd::Zero(p, p);
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    double pr = 1.0 / (1.0 + std::exp(-eta[k]));
    info -= pr * (1 - pr) * d.row(k).transpose() * d.row(k);
    if (t[i].v == 1 && t[i].y_star == 0) {
      dpsi -= odds0[k];
      dbeta -= odds0[k] * s.theta[p] * d0.row(k);
    }
  }
  CHECK(parts.v1(p, p) == doctest::Approx(dpsi / n).epsilon(1e-6));
  for (Eigen::Index j = 0; j < p; ++j) {
    CHECK(parts.v1(p, j) == doctest::Approx(dbeta[j] / n).epsilon(1e-5));
    for (Eigen::Index k = 0; k < p; ++k) CHECK(parts.v1(j, k) == doctest::Approx(info(j, k) / n).epsilon(1e-5));
  }
}

TEST_CASE("cohort stacks are solved at their estimates") {
  ScenarioParams p = scenario_params(2);
  p.n = 6000;
  CohortDataset d = generate_cohort(p, 4, 0).observed();
  for (Estimator e : {Estimator::DidOm, Estimator::DidIpw, Estimator::Standardized, Estimator::UdidDr}) {
    CAPTURE(estimator_label(e));
    StackedEE s = stack_estimator(d, e, default_design(e, 1));
    SandwichParts parts = sandwich_parts(s);
    CHECK(parts.residual_norm <= 1e-8);
    CHECK(s.theta[s.psi_index] == doctest::Approx(estimate(d, e, default_design(e, 1)).psi).epsilon(1e-10));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(parts.v2);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-10);
    CiReport r = sandwich_ci(d, e, default_design(e, 1));
    CHECK(r.se > 0.0);
    CHECK(r.ci.lower < r.psi);
  }
}

TEST_CASE("bootstrap is deterministic in the seed and independent of the worker count") {
  TndDataset t = scenario_tnd(2, 31, 4000);
  BootstrapOptions o;
  o.replicates = 40;
  o.seed = 77;
  DesignSpec spec = default_design(Estimator::TndOm, 1);
  CiReport a = bootstrap_ci(t, Estimator::TndOm, spec, o);
  o.workers = 3;
  CiReport b = bootstrap_ci(t, Estimator::TndOm, spec, o);
  CHECK(a.se == b.se);
  CHECK(a.ci.lower == b.ci.lower);
  o.seed = 78;
  CiReport c = bootstrap_ci(t, Estimator::TndOm, spec, o);
  CHECK(a.se != c.se);
  CHECK(a.replicates == 40);
  CHECK(a.failures == 0);
}

TEST_CASE("bootstrap SD is zero for a constant statistic and failures are bounded") {
  TndDataset t = fixtures::toy_tnd();
  BootstrapOptions o;
  o.replicates = 50;
  std::function<double(const TndDataset&)> constant = [](const TndDataset&) { return 2.5; };
  BootstrapDraws draws = bootstrap_draws(t, constant, o);
  CiReport r = bootstrap_report(2.5, draws, o);
  CHECK(r.se == 0.0);
  CHECK(r.ci.lower == 2.5);

  int calls = 0;
  std::function<double(const TndDataset&)> flaky = [&calls](const TndDataset&) -> double {
    if (calls++ % 5 == 0) throw Error(ErrorCode::DegenerateEstimand, "resample");
    return 1.0;
  };
  try {
    bootstrap_draws(t, flaky, o);
    FAIL("expected TooManyFailures");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TooManyFailures);
  }
  calls = 1;
  std::function<double(const TndDataset&)> rare = [&calls](const TndDataset&) -> double {
    if (calls++ % 25 == 0) throw Error(ErrorCode::DegenerateEstimand, "resample");
    return 1.0;
  };
  BootstrapDraws ok = bootstrap_draws(t, rare, o);
  CHECK(ok.failures == 2);
  CHECK(ok.estimates.size() == 48);
}

TEST_CASE("CI method labels") {
  CHECK(parse_ci_method("bootstrap") == CiMethod::Bootstrap);
  CHECK(ci_method_label(CiMethod::Sandwich) == "sandwich");
  CHECK_THROWS_AS(parse_ci_method("percentile"), Error);
  ConfidenceInterval ci = normal_interval(1.0, 0.1, 0.95, CiScale::Natural);
  CHECK(ci.upper == doctest::Approx(1.0 + 0.1959963984540054).epsilon(1e-12));
}
