#include "tndve/estimators_cohort.hpp"

#include <cmath>
#include <string>

#include "tndve/errors.hpp"
#include "tndve/numerics.hpp"

namespace tndve {

namespace {

void require_nonempty(const CohortDataset& data) {
  if (data.empty()) throw Error(ErrorCode::DegenerateData, "cohort dataset is empty");
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

CohortDataset subset(const CohortDataset& data, auto keep) {
  std::vector<CohortRecord> out;
  for (const auto& r : data.records())
    if (keep(r)) out.push_back(r);
  return CohortDataset(data.covariate_dim(), std::move(out));
}

Eigen::VectorXi outcome_vector(const CohortDataset& data) {
  Eigen::VectorXi y(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) y[static_cast<Eigen::Index>(i)] = data[i].y;
  return y;
}

// cells[v][y]
struct CohortCounts {
  double n[2][3] = {{0, 0, 0}, {0, 0, 0}};
};

CohortCounts count_cells(const CohortDataset& data) {
  CohortCounts c;
  for (const auto& r : data.records()) c.n[r.v][r.y] += 1.0;
  return c;
}

// Runs a moment solve and tags convergence failures with the UDiD step.
RootResult solve_step(int step, const VectorFn& f, const Eigen::VectorXd& start) {
  try {
    return solve_moment(f, start);
  } catch (const Error& e) {
    std::string what = e.what();
    what.erase(0, error_name(e.code()).size() + 2);
    throw Error(e.code(), "udid-dr step " + std::to_string(step) + ": " + what);
  }
}

}  // namespace

OutcomeRatioFit fit_outcome_ratio(const CohortDataset& data, const DesignSpec& spec, const CohortOptions& options) {
  require_nonempty(data);
  OutcomeRatioFit out;
  if (options.multinomial_ratio) {
    out.model = fit_multinomial3(spec.matrix(data), outcome_vector(data));
    Eigen::MatrixXd p = predict_probs3(out.model, spec.matrix(data, 0));
    out.ratio = p.col(2).array() / p.col(1).array();
    return out;
  }
  CohortDataset tested = subset(data, [](const CohortRecord& r) { return r.y != 0; });
  if (tested.empty()) throw Error(ErrorCode::DegenerateData, "no tested records");
  Eigen::VectorXd y2(tested.size());
  for (std::size_t i = 0; i < tested.size(); ++i) y2[static_cast<Eigen::Index>(i)] = tested[i].y == 2 ? 1.0 : 0.0;
  out.model = fit_logistic(spec.matrix(tested), y2);
  Eigen::VectorXd lin = spec.matrix(data, 0) * out.model.coefficients;
  out.ratio = lin.array().exp();
  return out;
}

FittedGlm fit_cohort_propensity(const CohortDataset& data, const DesignSpec& spec) {
  require_nonempty(data);
  if (spec.uses_treatment()) throw Error(ErrorCode::Config, "propensity design cannot contain V");
  CohortDataset refs = subset(data, [](const CohortRecord& r) { return r.y == 1; });
  if (refs.empty()) throw Error(ErrorCode::DegenerateData, "no Y=1 records");
  Eigen::VectorXd v(refs.size());
  for (std::size_t i = 0; i < refs.size(); ++i) v[static_cast<Eigen::Index>(i)] = refs[i].v;
  return fit_logistic(spec.matrix(refs), v);
}

EstimateResult estimate_cohort_did_om(const CohortDataset& data, const DesignSpec& spec, const CohortOptions& options) {
  require_nonempty(data);
  CohortCounts c = count_cells(data);
  if (c.n[1][2] == 0) throw Error(ErrorCode::DegenerateEstimand, "no vaccinated Y=2 records");
  if (c.n[1][1] == 0) throw Error(ErrorCode::DegenerateEstimand, "no vaccinated Y=1 records");
  OutcomeRatioFit fit = fit_outcome_ratio(data, spec, options);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& r = data[i];
    if (r.v != 1) continue;
    if (r.y == 2) num += 1.0;
    if (r.y == 1) den += fit.ratio[static_cast<Eigen::Index>(i)];
  }
  EstimateResult r = make_result(num / den, "did-om", data.size());
  r.diagnostics.push_back(diag("outcome-ratio", fit.model));
  return r;
}

EstimateResult estimate_cohort_did_ipw(const CohortDataset& data, const DesignSpec& spec) {
  require_nonempty(data);
  CohortCounts c = count_cells(data);
  if (c.n[1][2] == 0) throw Error(ErrorCode::DegenerateEstimand, "no vaccinated Y=2 records");
  if (c.n[0][2] == 0) throw Error(ErrorCode::DegenerateEstimand, "no unvaccinated Y=2 records");
  DesignSpec pi_spec = spec.without_treatment();
  FittedGlm fit = fit_cohort_propensity(data, pi_spec);
  Eigen::VectorXd pi1 = predict_probs(fit, pi_spec.matrix(data));
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& r = data[i];
    if (r.y != 2) continue;
    double p = pi1[static_cast<Eigen::Index>(i)];
    if (r.v == 1)
      num += 1.0;
    else
      den += p / (1.0 - p);
  }
  EstimateResult r = make_result(num / den, "did-ipw", data.size());
  r.diagnostics.push_back(diag("propensity", fit));
  return r;
}

EstimateResult estimate_standardized(const CohortDataset& data, const DesignSpec& spec) {
  require_nonempty(data);
  if (!spec.uses_treatment()) throw Error(ErrorCode::Config, "standardization design needs a V term");
  FittedGlm fit = fit_multinomial3(spec.matrix(data), outcome_vector(data));
  Eigen::MatrixXd p1 = predict_probs3(fit, spec.matrix(data, 1));
  Eigen::MatrixXd p0 = predict_probs3(fit, spec.matrix(data, 0));
  EstimateResult r = make_result(p1.col(2).sum() / p0.col(2).sum(), "standardized", data.size());
  r.diagnostics.push_back(diag("outcome", fit));
  return r;
}

Eigen::VectorXd udid_xi(const Eigen::Ref<const Eigen::MatrixXd>& mu_probs, const Eigen::Ref<const Eigen::VectorXd>& b) {
  Eigen::VectorXd xi(mu_probs.rows());
  for (Eigen::Index i = 0; i < mu_probs.rows(); ++i) {
    double eb = std::exp(b[i]);
    xi[i] = eb * mu_probs(i, 2) / (mu_probs(i, 0) + (mu_probs(i, 1) + mu_probs(i, 2)) * eb);
  }
  return xi;
}

Eigen::VectorXd udid_normalization(const Eigen::Ref<const Eigen::MatrixXd>& basis, const CohortDataset& data,
                                   const Eigen::Ref<const Eigen::VectorXd>& scale,
                                   const Eigen::Ref<const Eigen::VectorXd>& offset,
                                   const Eigen::Ref<const Eigen::VectorXd>& kappa) {
  Eigen::VectorXd eta = basis * kappa;
  Eigen::VectorXd w(basis.rows());
  for (Eigen::Index i = 0; i < basis.rows(); ++i) {
    double unvax = data[static_cast<std::size_t>(i)].v == 0 ? 1.0 : 0.0;
    w[i] = unvax * (1.0 + std::exp(scale[i] * eta[i] + offset[i])) - 1.0;
  }
  return basis.transpose() * w / static_cast<double>(basis.rows());
}

Eigen::VectorXd udid_beta_moment(const Eigen::Ref<const Eigen::MatrixXd>& basis, const CohortDataset& data,
                                 const Eigen::Ref<const Eigen::VectorXd>& eta, const Eigen::Ref<const Eigen::VectorXd>& mu1,
                                 const Eigen::Ref<const Eigen::VectorXd>& beta) {
  Eigen::VectorXd b = basis * beta;
  Eigen::VectorXd w(basis.rows());
  for (Eigen::Index i = 0; i < basis.rows(); ++i) {
    const auto& r = data[static_cast<std::size_t>(i)];
    if (r.y != 1) {
      w[i] = 0.0;
      continue;
    }
    w[i] = (r.v - expit(eta[i])) * std::exp(-b[i] * r.v) * (1.0 - mu1[i]);
  }
  return basis.transpose() * w / static_cast<double>(basis.rows());
}

UdidNuisance fit_udid_nuisance(const CohortDataset& data, const DesignSpec& basis_spec) {
  require_nonempty(data);
  if (basis_spec.uses_treatment()) throw Error(ErrorCode::Config, "udid basis cannot contain V");
  UdidNuisance nu;
  Eigen::MatrixXd basis = basis_spec.matrix(data);
  const Eigen::Index n = basis.rows();

  CohortDataset unvax = subset(data, [](const CohortRecord& r) { return r.v == 0; });
  CohortCounts c = count_cells(data);
  for (int y = 0; y < 3; ++y)
    if (c.n[0][y] == 0) throw Error(ErrorCode::DegenerateData, "udid-dr needs every outcome level among V=0");
  nu.mu_dagger = fit_multinomial3(basis_spec.matrix(unvax), outcome_vector(unvax));
  nu.pi_dagger = fit_cohort_propensity(data, basis_spec);

  Eigen::MatrixXd mu = predict_probs3(nu.mu_dagger, basis);
  Eigen::VectorXd pi1 = predict_probs(nu.pi_dagger, basis);

  Eigen::VectorXd scale(n), offset(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    bool tested = data[static_cast<std::size_t>(i)].y != 0;
    scale[i] = tested ? 0.0 : 1.0;
    offset[i] = tested ? logit(pi1[i]) : 0.0;
  }
  Eigen::VectorXd start = Eigen::VectorXd::Zero(basis.cols());
  nu.eta_initial = solve_step(
      3, [&](const Eigen::VectorXd& k) { return udid_normalization(basis, data, scale, offset, k); }, start).theta;

  Eigen::VectorXd eta = basis * nu.eta_initial;
  Eigen::VectorXd mu1 = mu.col(1);
  nu.beta_dr =
      solve_step(4, [&](const Eigen::VectorXd& b) { return udid_beta_moment(basis, data, eta, mu1, b); }, start).theta;

  Eigen::VectorXd b = basis * nu.beta_dr;
  scale.setOnes();
  for (Eigen::Index i = 0; i < n; ++i) offset[i] = data[static_cast<std::size_t>(i)].y != 0 ? b[i] : 0.0;
  RootResult step5 = solve_step(
      5, [&](const Eigen::VectorXd& k) { return udid_normalization(basis, data, scale, offset, k); },
      nu.eta_initial);
  nu.eta_dr = step5.theta;
  nu.eta_residual = step5.residual_norm;
  return nu;
}

EstimateResult estimate_cohort_udid_dr(const CohortDataset& data, const DesignSpec& spec) {
  require_nonempty(data);
  CohortCounts c = count_cells(data);
  if (c.n[1][2] == 0) throw Error(ErrorCode::DegenerateEstimand, "no vaccinated Y=2 records");
  DesignSpec basis_spec = spec.without_treatment();
  UdidNuisance nu = fit_udid_nuisance(data, basis_spec);
  Eigen::MatrixXd basis = basis_spec.matrix(data);
  Eigen::MatrixXd mu = predict_probs3(nu.mu_dagger, basis);
  Eigen::VectorXd b = basis * nu.beta_dr;
  Eigen::VectorXd eta = basis * nu.eta_dr;
  Eigen::VectorXd xi = udid_xi(mu, b);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& r = data[i];
    auto k = static_cast<Eigen::Index>(i);
    if (r.v == 1) {
      if (r.y == 2) num += 1.0;
      den += xi[k];
    } else {
      double by = r.y != 0 ? b[k] : 0.0;
      den += std::exp(eta[k] + by) * ((r.y == 2 ? 1.0 : 0.0) - xi[k]);
    }
  }
  EstimateResult r = make_result(num / den, "udid-dr", data.size());
  r.diagnostics.push_back(diag("outcome", nu.mu_dagger));
  r.diagnostics.push_back(diag("propensity", nu.pi_dagger));
  r.diagnostics.push_back({"normalization", true, 0, nu.eta_residual});
  return r;
}

}  // namespace tndve
