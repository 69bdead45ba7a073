#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "tndve/errors.hpp"
#include "tndve/estimators_tnd.hpp"
#include "tndve/sensitivity.hpp"
#include "tndve/simulation.hpp"

using namespace tndve;

namespace {

TndDataset scenario_tnd(int scenario, std::uint64_t seed, std::uint64_t replicate = 0) {
  return restrict_to_tested(generate_cohort(scenario_params(scenario), seed, replicate).observed());
}

const DesignSpec kOm = DesignSpec::interacted(1);

}  // namespace

TEST_CASE("eta = 0 reproduces the outcome-model estimate bit for bit") {
  TndDataset t = scenario_tnd(2, 8);
  EstimateResult plain = estimate_tnd_om(t, kOm);
  EstimateResult tilted = estimate_tilted(t, kOm, TiltFunction::covariate(0), 0.0);
  CHECK(tilted.psi == plain.psi);
  CHECK(tilted.ve == plain.ve);
  CHECK(estimate_tilted(t, kOm, TiltFunction::constant_value(1.0), 0.0).psi == plain.psi);
}

TEST_CASE("toy TND with q = 1: psi(eta) = 3 exp(-eta)") {
  TndDataset t = fixtures::toy_tnd();
  DesignSpec s = DesignSpec::interacted(0);
  TiltFunction one = TiltFunction::constant_value(1.0);
  CHECK(estimate_tilted(t, s, one, std::log(3.0)).psi == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(estimate_tilted(t, s, one, -std::log(3.0)).psi == doctest::Approx(9.0).epsilon(1e-10));

  TiltSpec spec;
  spec.q = one;
  spec.grid = {-1.0, 0.0, 1.0};
  CurveOptions o;
  o.ci = CiMethod::None;
  auto curve = sensitivity_curve(t, s, spec, o);
  REQUIRE(curve.size() == 3);
  CHECK(curve[0].result->psi == doctest::Approx(3.0 * std::exp(1.0)).epsilon(1e-10));
  CHECK(curve[1].result->psi == doctest::Approx(3.0).epsilon(1e-10));
  CHECK(curve[2].result->psi == doctest::Approx(3.0 * std::exp(-1.0)).epsilon(1e-10));

  spec.grid = {0.0};
  auto single = sensitivity_curve(t, s, spec, o);
  REQUIRE(single.size() == 1);
  CHECK(single[0].result->psi == estimate_tnd_om(t, s).psi);
}

TEST_CASE("constant q: psi(eta) = psi(0) exp(-eta c)") {
  TndDataset t = scenario_tnd(4, 12);
  double base = estimate_tnd_om(t, kOm).psi;
  for (double c : {1.0, 0.5, -2.0})
    for (double eta : {-0.7, -0.1, 0.3, 1.2}) {
      double psi = estimate_tilted(t, kOm, TiltFunction::constant_value(c), eta).psi;
      CHECK(psi == doctest::Approx(base * std::exp(-eta * c)).epsilon(1e-10));
    }
}

TEST_CASE("positive q gives a strictly decreasing curve") {
  TndDataset t = scenario_tnd(2, 3);
  TiltSpec spec;
  spec.q = TiltFunction::covariate(0);  // X ~ Unif(0, 1) > 0
  spec.grid = tilt_grid(2.0, 41);
  CurveOptions o;
  o.ci = CiMethod::None;
  auto curve = sensitivity_curve(t, kOm, spec, o);
  REQUIRE(curve.size() == 41);
  for (std::size_t k = 1; k < curve.size(); ++k) CHECK(curve[k].result->psi < curve[k - 1].result->psi);
}

TEST_CASE("sensitivity CIs: sandwich at eta = 0 is the plain one, workers do not change results") {
  TndDataset t = scenario_tnd(2, 21);
  TiltSpec spec;
  spec.grid = tilt_grid(0.5, 5);
  CurveOptions o;
  auto one = sensitivity_curve(t, kOm, spec, o);
  o.workers = 3;
  auto three = sensitivity_curve(t, kOm, spec, o);
  CiReport plain = sandwich_ci(t, Estimator::TndOm, kOm);
  REQUIRE(one[2].eta == 0.0);
  CHECK(one[2].result->se == doctest::Approx(plain.se).epsilon(1e-12));
  for (std::size_t k = 0; k < one.size(); ++k) {
    CHECK(one[k].result->psi == three[k].result->psi);
    CHECK(*one[k].result->se == *three[k].result->se);
    // q = 1 scales the whole stack, so the SE scales with psi
    CHECK(*one[k].result->se / one[k].result->psi == doctest::Approx(plain.se / plain.psi).epsilon(1e-6));
  }
}

TEST_CASE("bootstrap CIs along the curve") {
  ScenarioParams p = scenario_params(2);
  p.n = 5000;
  TndDataset t = restrict_to_tested(generate_cohort(p, 2, 0).observed());
  TiltSpec spec;
  spec.grid = {-0.5, 0.0, 0.5};
  CurveOptions o;
  o.ci = CiMethod::Bootstrap;
  o.bootstrap.replicates = 60;
  o.bootstrap.seed = 5;
  auto curve = sensitivity_curve(t, kOm, spec, o);
  for (const auto& pt : curve) {
    REQUIRE(pt.result);
    CHECK(*pt.result->se > 0.0);
    CHECK(pt.result->ci->lower < pt.result->psi);
  }
  // same resamples at every eta: with q = 1 the bootstrap SD scales exactly
  CHECK(*curve[0].result->se / curve[0].result->psi == doctest::Approx(*curve[1].result->se / curve[1].result->psi));
}

TEST_CASE("failing grid points are reported inline") {
  const int no_vax_controls[2][3] = {{6, 3, 2}, {6, 0, 2}};
  TndDataset t = restrict_to_tested(fixtures::cohort_from_counts(no_vax_controls));
  TiltSpec spec;
  spec.grid = {-1.0, 0.0, 1.0};
  auto curve = sensitivity_curve(t, DesignSpec::interacted(0), spec);
  REQUIRE(curve.size() == 3);
  for (const auto& pt : curve) {
    CHECK_FALSE(pt.result);
    CHECK(pt.error.find("DegenerateEstimand") != std::string::npos);
  }
}

TEST_CASE("grid construction and validation") {
  auto g = tilt_grid(1.0);
  REQUIRE(g.size() == 41);
  CHECK(g.front() == -1.0);
  CHECK(g.back() == 1.0);
  CHECK(g[20] == 0.0);
  CHECK(g[21] == doctest::Approx(0.05));
  CHECK(tilt_grid(3.0, 1) == std::vector<double>{0.0});
  CHECK_THROWS_AS(tilt_grid(-1.0), Error);
  CHECK_THROWS_AS(tilt_grid(1.0, 0), Error);
  TiltSpec bad;
  bad.grid = {0.0, 0.0};
  CHECK_THROWS_AS(bad.validate(), Error);
  bad.grid = {};
  CHECK_THROWS_AS(bad.validate(), Error);
  TndDataset t = scenario_tnd(1, 1);
  CHECK(TiltFunction::covariate(t, "x").column == 0);
  CHECK_THROWS_AS(TiltFunction::covariate(t, "age"), Error);
  CHECK_THROWS_AS(estimate_tilted(t, kOm, TiltFunction::covariate(3), 0.5), Error);
}

TEST_CASE("a tilt brackets the truth when equi-confounding fails") {
  // scenario 4: the untilted estimator is biased upwards; averaged over
  // replicates, some eta on a fine grid recovers exp(-1)
  const int reps = 12;
  auto grid = tilt_grid(1.0, 201);
  std::vector<double> mean(grid.size(), 0.0);
  for (int r = 0; r < reps; ++r) {
    TndDataset t = scenario_tnd(4, 40, static_cast<std::uint64_t>(r));
    for (std::size_t k = 0; k < grid.size(); ++k)
      mean[k] += estimate_tilted(t, kOm, TiltFunction::constant_value(1.0), grid[k]).psi / reps;
  }
  const double truth = std::exp(-1.0);
  CHECK(mean[100] > truth);
  CHECK(mean.back() < truth);
  double closest = 1e9;
  for (double m : mean) closest = std::min(closest, std::abs(m - truth));
  CHECK(closest < 0.01 * truth);
}
