#include "tndve/simulation.hpp"

#include <array>
#include <cmath>
#include <string>

#include "tndve/errors.hpp"
#include "tndve/numerics.hpp"
#include "tndve/rng.hpp"

namespace tndve {

namespace {

constexpr std::array<std::string_view, 4> kMisspecLabels{"none", "ps", "om", "both"};

bool ps_misspecified(Misspec m) { return m == Misspec::Ps || m == Misspec::Both; }
bool om_misspecified(Misspec m) { return m == Misspec::Om || m == Misspec::Both; }

void check_prob(double p, const char* what, std::size_t record) {
  if (!(p >= 0.0 && p <= 1.0))
    throw Error(ErrorCode::InvalidProbability,
                std::string(what) + " = " + std::to_string(p) + " at record " + std::to_string(record));
}

}  // namespace

std::string_view misspec_label(Misspec m) noexcept { return kMisspecLabels[static_cast<std::size_t>(m)]; }

Misspec parse_misspec(std::string_view label) {
  for (std::size_t k = 0; k < kMisspecLabels.size(); ++k)
    if (kMisspecLabels[k] == label) return static_cast<Misspec>(k);
  throw Error(ErrorCode::Config, "unknown misspecification '" + std::string(label) + "' (none|ps|om|both)");
}

ScenarioParams scenario_params(int id, Misspec misspec) {
  if (id < 1 || id > kScenarioCount) throw Error(ErrorCode::UnknownScenario, "scenario " + std::to_string(id));
  ScenarioParams p;
  p.alphaU = id == 1 ? 0.0 : 2.0;
  switch (id) {
    case 3:
      p.beta1V = 0.1;
      break;
    case 4:
      p.beta1U = 0.25;
      break;
    case 5:
      p.tau2U = -2.0;
      break;
    case 6:
      p.tau1V = -0.25;
      p.tau2V = -0.25;
      break;
    case 7:
      p.tau1V = -0.25;
      break;
    case 8:
      p.beta2V = -0.25;
      p.beta2VX = -1.5;
      break;
    default:
      break;
  }
  if (misspec != Misspec::None && id != 8)
    throw Error(ErrorCode::Config, "misspecified variants are defined for scenario 8 only");
  p.misspec = misspec;
  return p;
}

void validate_params(const ScenarioParams& p) {
  for (double c : {p.alpha0, p.alphaX, p.alphaU, p.beta10, p.beta1V, p.beta1X, p.beta1VX, p.beta1U, p.beta20, p.beta2V,
                   p.beta2X, p.beta2VX, p.beta2U, p.tau1, p.tau2, p.tau1V, p.tau2V, p.tauX, p.tauU, p.tau2U})
    if (!std::isfinite(c)) throw Error(ErrorCode::Config, "scenario coefficients must be finite");
  if (p.n == 0) throw Error(ErrorCode::Config, "population size must be positive");
}

double vaccination_prob(const ScenarioParams& p, double x, double u) {
  double xs = ps_misspecified(p.misspec) ? (x > 0.5 ? 1.0 : 0.0) : x;
  return expit(p.alpha0 + p.alphaX * xs + p.alphaU * u);
}

double infection_prob(const ScenarioParams& p, int illness, int v, double x, double u) {
  if (illness == 1) return std::exp(p.beta10 + p.beta1V * v + p.beta1X * x + p.beta1VX * v * x + p.beta1U * u);
  double xs = om_misspecified(p.misspec) ? (x - 0.5) * (x - 0.5) : x;
  return std::exp(p.beta20 + p.beta2V * v + p.beta2X * xs + p.beta2VX * v * x + p.beta2U * u);
}

double testing_prob(const ScenarioParams& p, int illness, int v, double x, double u) {
  if (illness == 0) return 0.0;
  double lin = illness == 1 ? p.tau1 + p.tau1V * v : p.tau2 + p.tau2V * v + p.tau2U * u;
  return std::exp(lin + p.tauX * x + p.tauU * u);
}

double focal_outcome_prob(const ScenarioParams& p, int v, double x, double u) {
  return infection_prob(p, 2, v, x, u) * testing_prob(p, 2, v, x, u);
}

CohortDataset GeneratedCohort::observed() const {
  std::vector<CohortRecord> rows(size());
  for (std::size_t k = 0; k < size(); ++k) rows[k] = {{x[k]}, v[k], y[k]};
  return CohortDataset(1, std::move(rows), {"x"});
}

CohortDataset GeneratedCohort::observed_with_confounder() const {
  std::vector<CohortRecord> rows(size());
  for (std::size_t k = 0; k < size(); ++k) rows[k] = {{x[k], u[k]}, v[k], y[k]};
  return CohortDataset(2, std::move(rows), {"x", "u"});
}

double GeneratedCohort::tested_fraction() const {
  if (y.empty()) return 0.0;
  std::size_t tested = 0;
  for (int yk : y) tested += yk != 0;
  return static_cast<double>(tested) / static_cast<double>(y.size());
}

GeneratedCohort generate_cohort(const ScenarioParams& params, std::uint64_t seed, std::uint64_t replicate) {
  validate_params(params);
  const std::size_t n = params.n;
  GeneratedCohort g;
  g.x.resize(n);
  g.u.resize(n);
  g.v.resize(n);
  g.i.resize(n);
  g.t.resize(n);
  g.y.resize(n);
  g.y0.resize(n);
  g.y1.resize(n);
  KeyedUniform uniform(seed);
  for (std::size_t k = 0; k < n; ++k) {
    auto [x, u] = uniform.pair(replicate, k, Stream::Covariate);
    double pv = vaccination_prob(params, x, u);
    check_prob(pv, "Pr[V=1]", k);
    int v = uniform(replicate, k, Stream::Vaccination) < pv ? 1 : 0;
    double ui = uniform(replicate, k, Stream::Infection);
    double ut = uniform(replicate, k, Stream::Testing);
    std::array<int, 2> ill{}, test{}, out{};
    for (int a = 0; a < 2; ++a) {
      double p1 = infection_prob(params, 1, a, x, u);
      double p2 = infection_prob(params, 2, a, x, u);
      check_prob(p1 + p2, "p1 + p2", k);
      ill[a] = ui < p1 ? 1 : (ui < p1 + p2 ? 2 : 0);
      for (int illness = 1; illness <= 2; ++illness) check_prob(testing_prob(params, illness, a, x, u), "Pr[T=1]", k);
      test[a] = ut < testing_prob(params, ill[a], a, x, u) ? 1 : 0;
      out[a] = ill[a] * test[a];
    }
    g.x[k] = x;
    g.u[k] = u;
    g.v[k] = v;
    g.i[k] = ill[v];
    g.t[k] = test[v];
    g.y[k] = out[v];
    g.y0[k] = out[0];
    g.y1[k] = out[1];
  }
  return g;
}

TruthValues true_psi(const ScenarioParams& p, const TruthOptions& options) {
  TruthValues t;
  t.conditional_or = std::exp(p.beta2V - p.beta1V + p.tau2V - p.tau1V);
  t.symptomatic = std::exp(p.beta2V);
  t.ratio_estimand = std::exp(p.beta2V + p.tau2V) / std::exp(p.beta1V + p.tau1V);
  if (p.beta2VX == 0.0) {
    t.psi = std::exp(p.beta2V + p.tau2V);
    return t;
  }
  // ratio of means a/b with a_k = w p2(1), b_k = w p2(0), w = Pr[V=1|X,U]
  KeyedUniform uniform(options.seed);
  const std::size_t m = options.draws;
  double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
  for (std::size_t k = 0; k < m; ++k) {
    auto [x, u] = uniform.pair(0, k, Stream::Covariate);
    double w = vaccination_prob(p, x, u);
    double a = w * focal_outcome_prob(p, 1, x, u);
    double b = w * focal_outcome_prob(p, 0, x, u);
    sa += a;
    sb += b;
    saa += a * a;
    sbb += b * b;
    sab += a * b;
  }
  const auto mm = static_cast<double>(m);
  double ma = sa / mm, mb = sb / mm;
  double va = saa / mm - ma * ma, vb = sbb / mm - mb * mb, cab = sab / mm - ma * mb;
  t.closed_form = false;
  t.psi = ma / mb;
  double r = t.psi;
  t.psi_se = std::sqrt(std::max(0.0, (va - 2 * r * cab + r * r * vb) / (mb * mb * mm)));
  return t;
}

std::optional<double> frozen_truth(int scenario, Misspec misspec) {
  if (scenario != 8) return std::nullopt;
  switch (misspec) {
    case Misspec::None:
      return 0.4460338417;
    case Misspec::Ps:
      return 0.4568813337;
    case Misspec::Om:
      return 0.4135677309;
    case Misspec::Both:
      return 0.4253693095;
  }
  return std::nullopt;
}

}  // namespace tndve
