#include "tndve/inference.hpp"

#include <initializer_list>
#include <string>

#include "tndve/estimators_cohort.hpp"
#include "tndve/estimators_tnd.hpp"
#include "tndve/numerics.hpp"

namespace tndve {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

VectorXd concat(std::initializer_list<VectorXd> parts) {
  Index total = 0;
  for (const auto& p : parts) total += p.size();
  VectorXd out(total);
  Index at = 0;
  for (const auto& p : parts) {
    out.segment(at, p.size()) = p;
    at += p.size();
  }
  return out;
}

VectorXd scalar(double v) { return VectorXd::Constant(1, v); }

VectorXd expit_vec(const VectorXd& lin) {
  return lin.unaryExpr([](double t) { return expit(t); });
}

// Multinomial class probabilities at coefficients c (no clamping).
MatrixXd softmax3(const MatrixXd& design, const VectorXd& c) {
  FittedGlm tmp;
  tmp.family = GlmFamily::Multinomial3;
  tmp.coefficients = c;
  return predict_probs3(tmp, design);
}

template <class Record, class Fn>
VectorXd indicator(const Dataset<Record>& data, Fn pred) {
  VectorXd out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out[static_cast<Index>(i)] = pred(data[i]) ? 1.0 : 0.0;
  return out;
}

struct TndColumns {
  VectorXd v, y;
  explicit TndColumns(const TndDataset& d)
      : v(indicator(d, [](const TndRecord& r) { return r.v == 1; })),
        y(indicator(d, [](const TndRecord& r) { return r.y_star == 1; })) {}
};

struct CohortColumns {
  VectorXd v, y1, y2, tested;
  Eigen::VectorXi y;
  explicit CohortColumns(const CohortDataset& d)
      : v(indicator(d, [](const CohortRecord& r) { return r.v == 1; })),
        y1(indicator(d, [](const CohortRecord& r) { return r.y == 1; })),
        y2(indicator(d, [](const CohortRecord& r) { return r.y == 2; })),
        tested(indicator(d, [](const CohortRecord& r) { return r.y != 0; })),
        y(d.size()) {
    for (std::size_t i = 0; i < d.size(); ++i) y[static_cast<Index>(i)] = d[i].y;
  }
};

StackedEE stack_logit(const TndDataset& data, const DesignSpec& spec) {
  auto column = spec.treatment_column();
  if (!column) throw Error(ErrorCode::Config, "logit estimator needs a V term in the design");
  EstimateResult est = estimate_tnd_logit(data, spec);
  FittedGlm fit = fit_tnd_outcome(data, spec);
  MatrixXd d = spec.matrix(data);
  TndColumns cols(data);
  const Index p = d.cols(), c = static_cast<Index>(*column);
  StackedEE s;
  s.theta = concat({fit.coefficients, scalar(est.psi)});
  s.psi_index = p;
  s.residuals = [d, cols, p, c](const VectorXd& t) {
    MatrixXd r(d.rows(), p + 1);
    r.leftCols(p) = logistic_score_rows(d, cols.y, t.head(p));
    r.col(p).setConstant(t[p] - std::exp(t[c]));
    return r;
  };
  return s;
}

StackedEE stack_om(const TndDataset& data, const DesignSpec& spec, const VectorXd& weights, double psi_hat) {
  FittedGlm fit = fit_tnd_outcome(data, spec);
  MatrixXd d = spec.matrix(data), d0 = spec.matrix(data, 0);
  TndColumns cols(data);
  const Index p = d.cols();
  StackedEE s;
  s.theta = concat({fit.coefficients, scalar(psi_hat)});
  s.psi_index = p;
  s.residuals = [d, d0, cols, weights, p](const VectorXd& t) {
    MatrixXd r(d.rows(), p + 1);
    r.leftCols(p) = logistic_score_rows(d, cols.y, t.head(p));
    VectorXd odds0 = (d0 * t.head(p)).array().exp();
    r.col(p) = cols.v.array() * (cols.y.array() - (1.0 - cols.y.array()) * odds0.array() * weights.array() * t[p]);
    return r;
  };
  return s;
}

StackedEE stack_ipw(const TndDataset& data, const DesignSpec& spec) {
  EstimateResult est = estimate_tnd_ipw(data, spec);
  DesignSpec pi_spec = spec.without_treatment();
  FittedGlm fit = fit_tnd_propensity(data, pi_spec);
  MatrixXd b = pi_spec.matrix(data);
  TndColumns cols(data);
  VectorXd controls = 1.0 - cols.y.array();
  const Index q = b.cols();
  StackedEE s;
  s.theta = concat({fit.coefficients, scalar(est.psi)});
  s.psi_index = q;
  s.residuals = [b, cols, controls, q](const VectorXd& t) {
    MatrixXd r(b.rows(), q + 1);
    r.leftCols(q) = logistic_score_rows(b, cols.v, t.head(q), &controls);
    VectorXd odds = (b * t.head(q)).array().exp();
    r.col(q) = cols.y.array() * (cols.v.array() - (1.0 - cols.v.array()) * odds.array() * t[q]);
    return r;
  };
  return s;
}

StackedEE stack_dr(const TndDataset& data, const DesignSpec& spec) {
  EstimateResult est = estimate_tnd_dr(data, spec);
  NuisanceTnd nu = fit_tnd_nuisance(data, spec);
  DrSolution sol = solve_dr_or_function(data, nu);
  MatrixXd d = spec.matrix(data), d0 = spec.matrix(data, 0), b = nu.pi_spec.matrix(data);
  TndColumns cols(data);
  VectorXd controls = 1.0 - cols.y.array();
  VectorXd vy = cols.v.array() * cols.y.array();
  const Index p = d.cols(), q = b.cols();
  StackedEE s;
  s.theta = concat({nu.mu.coefficients, nu.pi0.coefficients, sol.theta, scalar(est.psi)});
  s.psi_index = p + 2 * q;
  s.residuals = [d, d0, b, cols, controls, vy, p, q](const VectorXd& t) {
    MatrixXd r(d.rows(), p + 2 * q + 1);
    r.leftCols(p) = logistic_score_rows(d, cols.y, t.head(p));
    r.middleCols(p, q) = logistic_score_rows(b, cols.v, t.segment(p, q), &controls);
    VectorXd mu0 = expit_vec(d0 * t.head(p));
    VectorXd pi0 = expit_vec(b * t.segment(p, q));
    VectorXd tilt = (-(b * t.segment(p + q, q)).array() * vy.array()).exp();
    VectorXd w = (cols.v - pi0).array() * tilt.array() * (cols.y - mu0).array();
    r.middleCols(p + q, q) = b.array().colwise() * w.array();
    r.col(p + 2 * q) = vy.array() * (1.0 - t[p + 2 * q] * tilt.array());
    return r;
  };
  return s;
}

StackedEE stack_did_om(const CohortDataset& data, const DesignSpec& spec, const CohortOptions& options) {
  EstimateResult est = estimate_cohort_did_om(data, spec, options);
  OutcomeRatioFit fit = fit_outcome_ratio(data, spec, options);
  MatrixXd d = spec.matrix(data), d0 = spec.matrix(data, 0);
  CohortColumns cols(data);
  const Index k = fit.model.coefficients.size();
  const Index p = d.cols();
  const bool multinomial = options.multinomial_ratio;
  StackedEE s;
  s.theta = concat({fit.model.coefficients, scalar(est.psi)});
  s.psi_index = k;
  s.residuals = [d, d0, cols, k, p, multinomial](const VectorXd& t) {
    MatrixXd r(d.rows(), k + 1);
    VectorXd ratio;
    if (multinomial) {
      r.leftCols(k) = multinomial3_score_rows(d, cols.y, t.head(k));
      ratio = (d0 * (t.segment(p, p) - t.head(p))).array().exp();
    } else {
      r.leftCols(k) = logistic_score_rows(d, cols.y2, t.head(k), &cols.tested);
      ratio = (d0 * t.head(k)).array().exp();
    }
    r.col(k) = cols.v.array() * (cols.y2.array() - cols.y1.array() * ratio.array() * t[k]);
    return r;
  };
  return s;
}

StackedEE stack_did_ipw(const CohortDataset& data, const DesignSpec& spec) {
  EstimateResult est = estimate_cohort_did_ipw(data, spec);
  DesignSpec pi_spec = spec.without_treatment();
  FittedGlm fit = fit_cohort_propensity(data, pi_spec);
  MatrixXd b = pi_spec.matrix(data);
  CohortColumns cols(data);
  const Index q = b.cols();
  StackedEE s;
  s.theta = concat({fit.coefficients, scalar(est.psi)});
  s.psi_index = q;
  s.residuals = [b, cols, q](const VectorXd& t) {
    MatrixXd r(b.rows(), q + 1);
    r.leftCols(q) = logistic_score_rows(b, cols.v, t.head(q), &cols.y1);
    VectorXd odds = (b * t.head(q)).array().exp();
    r.col(q) = cols.y2.array() * (cols.v.array() - (1.0 - cols.v.array()) * odds.array() * t[q]);
    return r;
  };
  return s;
}

StackedEE stack_standardized(const CohortDataset& data, const DesignSpec& spec) {
  EstimateResult est = estimate_standardized(data, spec);
  MatrixXd d = spec.matrix(data), d1 = spec.matrix(data, 1), d0 = spec.matrix(data, 0);
  CohortColumns cols(data);
  FittedGlm fit = fit_multinomial3(d, cols.y);
  const Index k = fit.coefficients.size();
  StackedEE s;
  s.theta = concat({fit.coefficients, scalar(est.psi)});
  s.psi_index = k;
  s.residuals = [d, d1, d0, cols, k](const VectorXd& t) {
    MatrixXd r(d.rows(), k + 1);
    r.leftCols(k) = multinomial3_score_rows(d, cols.y, t.head(k));
    VectorXd mu1 = softmax3(d1, t.head(k)).col(2);
    VectorXd mu0 = softmax3(d0, t.head(k)).col(2);
    r.col(k) = mu1 - t[k] * mu0;
    return r;
  };
  return s;
}

StackedEE stack_udid(const CohortDataset& data, const DesignSpec& spec) {
  EstimateResult est = estimate_cohort_udid_dr(data, spec);
  DesignSpec basis_spec = spec.without_treatment();
  UdidNuisance nu = fit_udid_nuisance(data, basis_spec);
  MatrixXd b = basis_spec.matrix(data);
  CohortColumns cols(data);
  VectorXd unvax = 1.0 - cols.v.array();
  const Index q = b.cols();
  // layout: mu (2q) | pi (q) | kappa (q) | beta (q) | kappa_dr (q) | psi
  StackedEE s;
  s.theta = concat({nu.mu_dagger.coefficients, nu.pi_dagger.coefficients, nu.eta_initial, nu.beta_dr, nu.eta_dr,
                    scalar(est.psi)});
  s.psi_index = 6 * q;
  s.residuals = [b, cols, unvax, q](const VectorXd& t) {
    const Index n = b.rows();
    MatrixXd r(n, 6 * q + 1);
    r.leftCols(2 * q) = multinomial3_score_rows(b, cols.y, t.head(2 * q), &unvax);
    r.middleCols(2 * q, q) = logistic_score_rows(b, cols.v, t.segment(2 * q, q), &cols.y1);
    VectorXd pi_lin = b * t.segment(2 * q, q);
    VectorXd eta = b * t.segment(3 * q, q);
    VectorXd beta = b * t.segment(4 * q, q);
    VectorXd eta_dr = b * t.segment(5 * q, q);
    MatrixXd mu = softmax3(b, t.head(2 * q));
    VectorXd xi = udid_xi(mu, beta);
    VectorXd w3(n), w4(n), w5(n), eff(n);
    for (Index i = 0; i < n; ++i) {
      double lin3 = cols.tested[i] > 0 ? pi_lin[i] : eta[i];
      w3[i] = unvax[i] * (1.0 + std::exp(lin3)) - 1.0;
      w4[i] = cols.y1[i] * (cols.v[i] - expit(eta[i])) * std::exp(-beta[i] * cols.v[i]) * (1.0 - mu(i, 1));
      double tilt = std::exp(eta_dr[i] + cols.tested[i] * beta[i]);
      w5[i] = unvax[i] * (1.0 + tilt) - 1.0;
      double den = unvax[i] * tilt * (cols.y2[i] - xi[i]) + cols.v[i] * xi[i];
      eff[i] = cols.v[i] * cols.y2[i] - t[6 * q] * den;
    }
    r.middleCols(3 * q, q) = b.array().colwise() * w3.array();
    r.middleCols(4 * q, q) = b.array().colwise() * w4.array();
    r.middleCols(5 * q, q) = b.array().colwise() * w5.array();
    r.col(6 * q) = eff;
    return r;
  };
  return s;
}

}  // namespace

VectorXd StackedEE::mean_residual(const VectorXd& at) const { return residuals(at).colwise().mean().transpose(); }

StackedEE stack_estimator(const TndDataset& data, Estimator e, const DesignSpec& spec) {
  switch (e) {
    case Estimator::TndLogit:
      return stack_logit(data, spec);
    case Estimator::TndOm:
      return stack_om(data, spec, VectorXd::Ones(static_cast<Index>(data.size())), estimate_tnd_om(data, spec).psi);
    case Estimator::TndIpw:
      return stack_ipw(data, spec);
    case Estimator::TndDr:
      return stack_dr(data, spec);
    default:
      throw Error(ErrorCode::Config, "estimator '" + std::string(estimator_label(e)) + "' needs cohort data");
  }
}

StackedEE stack_estimator(const CohortDataset& data, Estimator e, const DesignSpec& spec,
                          const CohortOptions& options) {
  switch (e) {
    case Estimator::DidOm:
      return stack_did_om(data, spec, options);
    case Estimator::DidIpw:
      return stack_did_ipw(data, spec);
    case Estimator::Standardized:
      return stack_standardized(data, spec);
    case Estimator::UdidDr:
      return stack_udid(data, spec);
    default:
      throw Error(ErrorCode::Config, "stack TND estimators on restrict_to_tested(data)");
  }
}

StackedEE stack_tnd_om_weighted(const TndDataset& data, const DesignSpec& spec, const VectorXd& weights,
                                double psi_hat) {
  if (weights.size() != static_cast<Index>(data.size()))
    throw Error(ErrorCode::DimensionMismatch, "tilt weights do not match the sample size");
  return stack_om(data, spec, weights, psi_hat);
}

std::string_view ci_method_label(CiMethod m) noexcept {
  switch (m) {
    case CiMethod::None:
      return "none";
    case CiMethod::Sandwich:
      return "sandwich";
    case CiMethod::Bootstrap:
      return "bootstrap";
  }
  return "none";
}

CiMethod parse_ci_method(std::string_view label) {
  for (CiMethod m : {CiMethod::None, CiMethod::Sandwich, CiMethod::Bootstrap})
    if (ci_method_label(m) == label) return m;
  throw Error(ErrorCode::Config, "unknown CI method '" + std::string(label) + "'");
}

ConfidenceInterval normal_interval(double psi, double se, double level, CiScale scale) {
  double z = normal_quantile_two_sided(level);
  if (scale == CiScale::Log) {
    double half = z * se / psi;
    return {psi * std::exp(-half), psi * std::exp(half)};
  }
  return {psi - z * se, psi + z * se};
}

SandwichParts sandwich_parts(const StackedEE& stack) {
  MatrixXd r = stack.residuals(stack.theta);
  const auto n = static_cast<double>(r.rows());
  if (r.rows() == 0) throw Error(ErrorCode::DegenerateData, "sandwich: no records");
  SandwichParts out;
  out.n = static_cast<std::size_t>(r.rows());
  out.residual_norm = (r.colwise().sum() / n).cwiseAbs().maxCoeff();
  out.v2 = r.transpose() * r / n;
  VectorFn mean = [&stack](const VectorXd& t) { return stack.mean_residual(t); };
  out.v1 = numeric_jacobian(mean, stack.theta);
  Eigen::FullPivLU<MatrixXd> lu(out.v1);
  if (!lu.isInvertible() || !out.v1.allFinite()) throw Error(ErrorCode::SingularJacobian, "sandwich: V1 is singular");
  MatrixXd inv = lu.inverse();
  out.covariance = inv * out.v2 * inv.transpose();
  return out;
}

CiReport sandwich_ci(const StackedEE& stack, double level, CiScale scale) {
  SandwichParts parts = sandwich_parts(stack);
  const auto n = static_cast<double>(parts.n);
  CiReport rep;
  rep.psi = stack.theta[stack.psi_index];
  double var = parts.covariance(stack.psi_index, stack.psi_index);
  if (!(var >= 0.0) || !std::isfinite(var)) throw Error(ErrorCode::SingularJacobian, "sandwich: negative variance");
  rep.se = std::sqrt(var / n);
  rep.scale = scale;
  rep.level = level;
  rep.method = CiMethod::Sandwich;
  rep.ci = normal_interval(rep.psi, rep.se, level, scale);
  return rep;
}

CiReport sandwich_ci(const TndDataset& data, Estimator e, const DesignSpec& spec, double level, CiScale scale) {
  return sandwich_ci(stack_estimator(data, e, spec), level, scale);
}

CiReport sandwich_ci(const CohortDataset& data, Estimator e, const DesignSpec& spec, double level, CiScale scale,
                     const CohortOptions& options) {
  if (is_tnd_estimator(e)) return sandwich_ci(restrict_to_tested(data), e, spec, level, scale);
  return sandwich_ci(stack_estimator(data, e, spec, options), level, scale);
}

CiReport bootstrap_report(double psi_hat, const BootstrapDraws& draws, const BootstrapOptions& options) {
  const auto& x = draws.estimates;
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  CiReport rep;
  rep.psi = psi_hat;
  rep.se = std::sqrt(ss / static_cast<double>(x.size() - 1));
  rep.scale = options.scale;
  rep.level = options.level;
  rep.method = CiMethod::Bootstrap;
  rep.replicates = options.replicates;
  rep.failures = draws.failures;
  rep.ci = normal_interval(psi_hat, rep.se, options.level, options.scale);
  return rep;
}

CiReport bootstrap_ci(const TndDataset& data, Estimator e, const DesignSpec& spec, const BootstrapOptions& options) {
  double psi_hat = estimate(data, e, spec).psi;
  std::function<double(const TndDataset&)> est = [&](const TndDataset& d) { return estimate(d, e, spec).psi; };
  return bootstrap_report(psi_hat, bootstrap_draws(data, est, options), options);
}

CiReport bootstrap_ci(const CohortDataset& data, Estimator e, const DesignSpec& spec, const BootstrapOptions& options,
                      const CohortOptions& cohort_options) {
  if (is_tnd_estimator(e)) return bootstrap_ci(restrict_to_tested(data), e, spec, options);
  double psi_hat = estimate(data, e, spec, cohort_options).psi;
  std::function<double(const CohortDataset&)> est = [&](const CohortDataset& d) {
    return estimate(d, e, spec, cohort_options).psi;
  };
  return bootstrap_report(psi_hat, bootstrap_draws(data, est, options), options);
}

}  // namespace tndve
