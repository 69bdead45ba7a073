#include "tndve/estimators_tnd.hpp"

#include <cmath>

#include "tndve/errors.hpp"

namespace tndve {

namespace {

Eigen::VectorXd y_star_vector(const TndDataset& data) {
  Eigen::VectorXd y(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) y[static_cast<Eigen::Index>(i)] = data[i].y_star;
  return y;
}

void require_nonempty(const TndDataset& data) {
  if (data.empty()) throw Error(ErrorCode::DegenerateData, "TND dataset is empty");
}

EstimateResult make_result(double psi, const char* method, std::size_t n) {
  if (!(psi > 0.0) || !std::isfinite(psi))
    throw Error(ErrorCode::DegenerateEstimand, std::string(method) + ": estimate is not a positive finite number");
  EstimateResult r;
  r.psi = psi;
  r.ve = 1.0 - psi;
  r.method = method;
  r.n = n;
  return r;
}

NuisanceDiagnostic diag(const char* name, const FittedGlm& fit) {
  return {name, fit.converged, fit.iterations, fit.score_norm};
}

}  // namespace

TndCounts count_cells(const TndDataset& data) {
  TndCounts c;
  for (const auto& r : data.records()) c.n[r.v][r.y_star] += 1.0;
  return c;
}

Eigen::VectorXd NuisanceTnd::mu0(const TndDataset& data) const {
  return predict_probs(mu, mu_spec.matrix(data, 0));
}

Eigen::VectorXd NuisanceTnd::pi(const TndDataset& data) const { return predict_probs(pi0, pi_spec.matrix(data)); }

FittedGlm fit_tnd_outcome(const TndDataset& data, const DesignSpec& spec) {
  require_nonempty(data);
  return fit_logistic(spec.matrix(data), y_star_vector(data));
}

FittedGlm fit_tnd_propensity(const TndDataset& data, const DesignSpec& spec) {
  require_nonempty(data);
  if (spec.uses_treatment()) throw Error(ErrorCode::Config, "propensity design cannot contain V");
  std::vector<TndRecord> controls;
  for (const auto& r : data.records())
    if (r.y_star == 0) controls.push_back(r);
  TndDataset negatives(data.covariate_dim(), std::move(controls));
  if (negatives.empty()) throw Error(ErrorCode::DegenerateData, "no test-negative controls");
  Eigen::VectorXd v(negatives.size());
  for (std::size_t i = 0; i < negatives.size(); ++i) v[static_cast<Eigen::Index>(i)] = negatives[i].v;
  return fit_logistic(spec.matrix(negatives), v);
}

NuisanceTnd fit_tnd_nuisance(const TndDataset& data, const DesignSpec& outcome_spec) {
  DesignSpec pi_spec = outcome_spec.without_treatment();
  FittedGlm mu = fit_tnd_outcome(data, outcome_spec);
  FittedGlm pi0 = fit_tnd_propensity(data, pi_spec);
  return NuisanceTnd{outcome_spec, std::move(mu), std::move(pi_spec), std::move(pi0)};
}

EstimateResult estimate_tnd_logit(const TndDataset& data, const DesignSpec& spec) {
  require_nonempty(data);
  auto column = spec.treatment_column();
  if (!column) throw Error(ErrorCode::Config, "logit estimator needs a V term in the design");
  TndCounts c = count_cells(data);
  for (int v = 0; v < 2; ++v)
    for (int y = 0; y < 2; ++y)
      if (c.n[v][y] == 0) throw Error(ErrorCode::DegenerateData, "empty V x Y* cell");
  FittedGlm fit = fit_tnd_outcome(data, spec);
  EstimateResult r = make_result(std::exp(fit.coefficients[static_cast<Eigen::Index>(*column)]), "tnd-logit",
                                 data.size());
  r.diagnostics.push_back(diag("outcome", fit));
  return r;
}

EstimateResult estimate_tnd_om(const TndDataset& data, const DesignSpec& spec, const Eigen::VectorXd* weights) {
  require_nonempty(data);
  TndCounts c = count_cells(data);
  if (c.n[1][1] == 0) throw Error(ErrorCode::DegenerateEstimand, "no vaccinated test-positives");
  if (c.n[1][0] == 0) throw Error(ErrorCode::DegenerateEstimand, "no vaccinated test-negatives");
  FittedGlm fit = fit_tnd_outcome(data, spec);
  Eigen::VectorXd mu0 = predict_probs(fit, spec.matrix(data, 0));
  if (weights && weights->size() != static_cast<Eigen::Index>(data.size()))
    throw Error(ErrorCode::DimensionMismatch, "tilt weights do not match the sample size");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& r = data[i];
    if (r.v != 1) continue;
    const auto k = static_cast<Eigen::Index>(i);
    double m = mu0[k];
    if (r.y_star == 1)
      num += 1.0;
    else
      den += (weights ? (*weights)[k] : 1.0) * (m / (1.0 - m));
  }
  EstimateResult r = make_result(num / den, "tnd-om", data.size());
  r.diagnostics.push_back(diag("outcome", fit));
  return r;
}

EstimateResult estimate_tnd_ipw(const TndDataset& data, const DesignSpec& spec) {
  require_nonempty(data);
  TndCounts c = count_cells(data);
  if (c.n[1][1] == 0) throw Error(ErrorCode::DegenerateEstimand, "no vaccinated test-positives");
  if (c.n[0][1] == 0) throw Error(ErrorCode::DegenerateEstimand, "no unvaccinated test-positives");
  DesignSpec pi_spec = spec.without_treatment();
  FittedGlm fit = fit_tnd_propensity(data, pi_spec);
  Eigen::VectorXd pi0 = predict_probs(fit, pi_spec.matrix(data));
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& r = data[i];
    if (r.y_star != 1) continue;
    double p = pi0[static_cast<Eigen::Index>(i)];
    if (r.v == 1)
      num += 1.0;
    else
      den += p / (1.0 - p);
  }
  EstimateResult r = make_result(num / den, "tnd-ipw", data.size());
  r.diagnostics.push_back(diag("propensity", fit));
  return r;
}

Eigen::VectorXd dr_moment(const Eigen::Ref<const Eigen::MatrixXd>& basis, const TndDataset& data,
                          const Eigen::Ref<const Eigen::VectorXd>& mu0, const Eigen::Ref<const Eigen::VectorXd>& pi0,
                          const Eigen::Ref<const Eigen::VectorXd>& theta) {
  Eigen::VectorXd phi = basis * theta;
  Eigen::VectorXd w(basis.rows());
  for (Eigen::Index i = 0; i < basis.rows(); ++i) {
    const auto& r = data[static_cast<std::size_t>(i)];
    double tilt = (r.v == 1 && r.y_star == 1) ? std::exp(-phi[i]) : 1.0;
    w[i] = (r.v - pi0[i]) * tilt * (r.y_star - mu0[i]);
  }
  return basis.transpose() * w / static_cast<double>(basis.rows());
}

DrSolution solve_dr_or_function(const TndDataset& data, const NuisanceTnd& nuisance, const RootOptions& options) {
  require_nonempty(data);
  Eigen::MatrixXd basis = nuisance.pi_spec.matrix(data);
  Eigen::VectorXd mu0 = nuisance.mu0(data);
  Eigen::VectorXd pi0 = nuisance.pi(data);
  VectorFn moment = [&](const Eigen::VectorXd& theta) { return dr_moment(basis, data, mu0, pi0, theta); };
  RootResult root = solve_moment(moment, Eigen::VectorXd::Zero(basis.cols()), options);
  return DrSolution{std::move(root.theta), root.residual_norm, root.iterations};
}

EstimateResult estimate_tnd_dr(const TndDataset& data, const DesignSpec& spec) {
  require_nonempty(data);
  TndCounts c = count_cells(data);
  if (c.n[1][1] == 0) throw Error(ErrorCode::DegenerateEstimand, "no vaccinated test-positives");
  NuisanceTnd nuisance = fit_tnd_nuisance(data, spec);
  DrSolution sol = solve_dr_or_function(data, nuisance);
  Eigen::MatrixXd basis = nuisance.pi_spec.matrix(data);
  Eigen::VectorXd phi = basis * sol.theta;
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& r = data[i];
    if (r.v == 1 && r.y_star == 1) {
      num += 1.0;
      den += std::exp(-phi[static_cast<Eigen::Index>(i)]);
    }
  }
  EstimateResult r = make_result(num / den, "tnd-dr", data.size());
  r.diagnostics.push_back(diag("outcome", nuisance.mu));
  r.diagnostics.push_back(diag("propensity", nuisance.pi0));
  r.diagnostics.push_back({"odds-ratio", true, sol.iterations, sol.residual_norm});
  return r;
}

}  // namespace tndve
