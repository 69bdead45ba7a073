#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "tndve/data.hpp"

namespace tndve {

enum class Misspec { None, Ps, Om, Both };

std::string_view misspec_label(Misspec m) noexcept;
Misspec parse_misspec(std::string_view label);

// Vaccination, infection (p1, p2) and testing coefficients of the
// structural simulation model.
struct ScenarioParams {
  double alpha0 = -0.9, alphaX = -1.0, alphaU = 0.0;
  double beta10 = -2.1, beta1V = 0.0, beta1X = -0.5, beta1VX = 0.0, beta1U = 1.0;
  double beta20 = -2.4, beta2V = -1.0, beta2X = -0.625, beta2VX = 0.0, beta2U = 1.0;
  double tau1 = -1.1, tau2 = -0.6, tau1V = 0.0, tau2V = 0.0, tauX = 0.25, tauU = 0.25, tau2U = 0.0;
  std::size_t n = 15000;
  Misspec misspec = Misspec::None;

  friend bool operator==(const ScenarioParams&, const ScenarioParams&) = default;
};

inline constexpr int kScenarioCount = 8;

// Presets 1..8. Scenarios 6 and 7 carry (tau1V, tau2V) = (-0.25, -0.25) and
// (-0.25, 0) respectively.
ScenarioParams scenario_params(int id, Misspec misspec = Misspec::None);

// Finite coefficients and n > 0; Config error otherwise.
void validate_params(const ScenarioParams& p);

// Per-unit model probabilities.
double vaccination_prob(const ScenarioParams& p, double x, double u);
double infection_prob(const ScenarioParams& p, int illness, int v, double x, double u);
double testing_prob(const ScenarioParams& p, int illness, int v, double x, double u);
// Pr[Y^v = 2 | X, U]
double focal_outcome_prob(const ScenarioParams& p, int v, double x, double u);

struct GeneratedCohort {
  std::vector<double> x, u;
  std::vector<int> v, i, t, y, y0, y1;

  std::size_t size() const noexcept { return v.size(); }
  // Estimator-facing views; latent columns never leave through these.
  CohortDataset observed() const;              // covariates (x)
  CohortDataset observed_with_confounder() const;  // covariates (x, u)
  double tested_fraction() const;
};

// Draws one population. Uniforms are keyed by (seed, replicate, record, tag),
// and both potential-outcome branches share the infection and testing draws.
// Throws InvalidProbability when a model probability leaves [0, 1].
GeneratedCohort generate_cohort(const ScenarioParams& params, std::uint64_t seed, std::uint64_t replicate = 0);

struct TruthValues {
  double psi = 0.0;              // Pr[Y^1=2 | V=1] / Pr[Y^0=2 | V=1]
  double psi_se = 0.0;           // 0 for the closed form
  bool closed_form = true;
  double conditional_or = 0.0;   // exp(b2V - b1V + t2V - t1V), the TND logistic coefficient
  double symptomatic = 0.0;      // exp(b2V), effect on symptomatic focal illness
  double ratio_estimand = 0.0;   // exp(b2V + t2V) / exp(b1V + t1V)
};

struct TruthOptions {
  std::size_t draws = 4'000'000;
  std::uint64_t seed = 0x5EED7A11u;
};

// Closed form exp(b2V + t2V) when beta2VX = 0. Otherwise a Monte Carlo
// integral over (X, U) of the conditional probabilities, weighted by
// Pr[V=1 | X, U], with a delta-method standard error.
TruthValues true_psi(const ScenarioParams& params, const TruthOptions& options = {});

// Frozen truths for scenario 8 and its misspecified variants (the Monte
// Carlo integral above at 1e8 draws); nullopt for other cells.
std::optional<double> frozen_truth(int scenario, Misspec misspec);

}  // namespace tndve
