#include "tndve/glm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tndve/errors.hpp"
#include "tndve/numerics.hpp"

namespace tndve {

// ---------------------------------------------------------------- DesignSpec

DesignSpec::DesignSpec(std::vector<Term> terms) : terms_(std::move(terms)) {
  if (terms_.empty() || terms_.front().kind != TermKind::Intercept)
    throw Error(ErrorCode::Config, "design must start with the intercept");
  for (std::size_t k = 1; k < terms_.size(); ++k) {
    if (terms_[k].kind == TermKind::Intercept) throw Error(ErrorCode::Config, "duplicate intercept term");
    if (std::find(terms_.begin(), terms_.begin() + static_cast<std::ptrdiff_t>(k), terms_[k]) !=
        terms_.begin() + static_cast<std::ptrdiff_t>(k))
      throw Error(ErrorCode::Config, "duplicate design term");
  }
}

DesignSpec DesignSpec::covariates_only(std::size_t dim) {
  std::vector<Term> t{{TermKind::Intercept, 0}};
  for (std::size_t j = 0; j < dim; ++j) t.push_back({TermKind::Covariate, j});
  return DesignSpec(std::move(t));
}

DesignSpec DesignSpec::main_effects(std::size_t dim) {
  std::vector<Term> t{{TermKind::Intercept, 0}, {TermKind::Treatment, 0}};
  for (std::size_t j = 0; j < dim; ++j) t.push_back({TermKind::Covariate, j});
  return DesignSpec(std::move(t));
}

DesignSpec DesignSpec::interacted(std::size_t dim) {
  std::vector<Term> t = main_effects(dim).terms();
  for (std::size_t j = 0; j < dim; ++j) t.push_back({TermKind::Interaction, j});
  return DesignSpec(std::move(t));
}

bool DesignSpec::uses_treatment() const noexcept {
  return std::any_of(terms_.begin(), terms_.end(), [](const Term& t) {
    return t.kind == TermKind::Treatment || t.kind == TermKind::Interaction;
  });
}

std::optional<std::size_t> DesignSpec::treatment_column() const noexcept {
  for (std::size_t k = 0; k < terms_.size(); ++k)
    if (terms_[k].kind == TermKind::Treatment) return k;
  return std::nullopt;
}

std::size_t DesignSpec::covariates_required() const noexcept {
  std::size_t need = 0;
  for (const auto& t : terms_)
    if (t.kind == TermKind::Covariate || t.kind == TermKind::Interaction) need = std::max(need, t.index + 1);
  return need;
}

DesignSpec DesignSpec::without_treatment() const {
  std::vector<Term> t;
  for (const auto& term : terms_)
    if (term.kind == TermKind::Intercept || term.kind == TermKind::Covariate) t.push_back(term);
  return DesignSpec(std::move(t));
}

void DesignSpec::fill_row(std::span<const double> x, int v, double* out) const {
  for (std::size_t k = 0; k < terms_.size(); ++k) {
    const Term& t = terms_[k];
    switch (t.kind) {
      case TermKind::Intercept: out[k] = 1.0; break;
      case TermKind::Treatment: out[k] = v; break;
      case TermKind::Covariate: out[k] = x[t.index]; break;
      case TermKind::Interaction: out[k] = v * x[t.index]; break;
    }
  }
}

Eigen::RowVectorXd DesignSpec::row(std::span<const double> x, int v) const {
  check_dim(x.size());
  Eigen::RowVectorXd r(width());
  fill_row(x, v, r.data());
  return r;
}

void DesignSpec::check_dim(std::size_t covariate_dim) const {
  if (covariates_required() > covariate_dim)
    throw Error(ErrorCode::DimensionMismatch, "design references covariate " +
                                                  std::to_string(covariates_required()) + " but data has " +
                                                  std::to_string(covariate_dim));
}

std::string DesignSpec::describe(const std::vector<std::string>& names) const {
  auto name = [&](std::size_t j) { return j < names.size() ? names[j] : "x" + std::to_string(j + 1); };
  std::string s = "(";
  for (std::size_t k = 0; k < terms_.size(); ++k) {
    if (k) s += ", ";
    switch (terms_[k].kind) {
      case TermKind::Intercept: s += "1"; break;
      case TermKind::Treatment: s += "V"; break;
      case TermKind::Covariate: s += name(terms_[k].index); break;
      case TermKind::Interaction: s += "V:" + name(terms_[k].index); break;
    }
  }
  return s + ")";
}

// ---------------------------------------------------------------- fitting

namespace {

void check_rank(const Eigen::Ref<const Eigen::MatrixXd>& design) {
  if (design.rows() < design.cols())
    throw Error(ErrorCode::RankDeficient, "fewer rows than regressors");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < design.cols()) throw Error(ErrorCode::RankDeficient, "design matrix is not full column rank");
}

[[noreturn]] void fail_to_converge(const Eigen::VectorXd& beta, const GlmOptions& options, const char* what) {
  if (beta.cwiseAbs().maxCoeff() > options.separation_threshold)
    throw Error(ErrorCode::Separation, std::string(what) + ": fitted probabilities pinned at 0/1");
  throw Error(ErrorCode::NotConverged, std::string(what) + ": iteration cap reached");
}

}  // namespace

double logistic_loglik(const Eigen::Ref<const Eigen::MatrixXd>& design, const Eigen::Ref<const Eigen::VectorXd>& y,
                       const Eigen::Ref<const Eigen::VectorXd>& coefficients, const Eigen::VectorXd* weights) {
  Eigen::VectorXd eta = design * coefficients;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    double w = weights ? (*weights)[i] : 1.0;
    ll += w * (y[i] * eta[i] - log1pexp(eta[i]));
  }
  return ll;
}

FittedGlm fit_logistic(const Eigen::Ref<const Eigen::MatrixXd>& design, const Eigen::Ref<const Eigen::VectorXd>& y,
                       const Eigen::VectorXd* weights, const GlmOptions& options) {
  const Eigen::Index n = design.rows(), p = design.cols();
  if (y.size() != n || (weights && weights->size() != n))
    throw Error(ErrorCode::DimensionMismatch, "logistic: outcome length differs from design rows");
  double w1 = 0.0, w0 = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double w = weights ? (*weights)[i] : 1.0;
    if (y[i] != 0.0 && y[i] != 1.0) throw Error(ErrorCode::Value, "logistic: outcome must be 0/1");
    (y[i] == 1.0 ? w1 : w0) += w;
  }
  if (w1 <= 0.0 || w0 <= 0.0) throw Error(ErrorCode::DegenerateData, "logistic: outcome has a single class");
  check_rank(design);

  FittedGlm fit;
  fit.family = GlmFamily::Binomial;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  double ll = logistic_loglik(design, y, beta, weights);
  Eigen::VectorXd prob(n), work(n);
  bool polished = false;
  double last_step = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter <= options.max_iterations; ++iter) {
    prob = (design * beta).unaryExpr([](double t) { return expit(t); });
    Eigen::VectorXd resid = y - prob;
    if (weights) resid.array() *= weights->array();
    Eigen::VectorXd score = design.transpose() * resid;
    fit.score_norm = score.cwiseAbs().maxCoeff();
    fit.iterations = iter;
    // one extra Newton step after reaching tolerance polishes to rounding level;
    // a small score with steps that stay large means the fit is running off to infinity
    fit.converged = fit.score_norm <= options.tolerance &&
                    (fit.score_norm == 0.0 || last_step <= 1e-4 * (1.0 + beta.cwiseAbs().maxCoeff()));
    if (fit.converged && (polished || fit.score_norm == 0.0)) break;
    if (iter == options.max_iterations) break;
    polished = fit.converged;
    work = prob.array() * (1.0 - prob.array());
    if (weights) work.array() *= weights->array();
    Eigen::MatrixXd info = design.transpose() * work.asDiagonal() * design;
    Eigen::LLT<Eigen::MatrixXd> llt(info);
    if (llt.info() != Eigen::Success) fail_to_converge(beta, options, "logistic");
    Eigen::VectorXd step = llt.solve(score);
    double scale = 1.0;
    Eigen::VectorXd candidate = beta + step;
    double ll_new = logistic_loglik(design, y, candidate, weights);
    for (int h = 0; h < 30 && !(ll_new >= ll - 1e-12 * std::abs(ll)); ++h) {
      scale *= 0.5;
      candidate = beta + scale * step;
      ll_new = logistic_loglik(design, y, candidate, weights);
    }
    last_step = scale * step.cwiseAbs().maxCoeff();
    beta = std::move(candidate);
    ll = ll_new;
    if (!beta.allFinite()) fail_to_converge(Eigen::VectorXd::Constant(p, 1e300), options, "logistic");
  }
  if (!fit.converged) fail_to_converge(beta, options, "logistic");
  fit.coefficients = std::move(beta);
  fit.loglik = ll;
  return fit;
}

namespace {

// Class probabilities (rows) for a baseline-category multinomial logit.
Eigen::MatrixXd softmax3(const Eigen::Ref<const Eigen::MatrixXd>& design, const Eigen::Ref<const Eigen::VectorXd>& b) {
  const Eigen::Index p = design.cols();
  Eigen::ArrayXd e1 = (design * b.head(p)).array();
  Eigen::ArrayXd e2 = (design * b.tail(p)).array();
  Eigen::ArrayXd m = e1.max(e2).max(0.0);
  Eigen::ArrayXd a0 = (-m).exp(), a1 = (e1 - m).exp(), a2 = (e2 - m).exp();
  Eigen::ArrayXd z = a0 + a1 + a2;
  Eigen::MatrixXd probs(design.rows(), 3);
  probs.col(0) = a0 / z;
  probs.col(1) = a1 / z;
  probs.col(2) = a2 / z;
  return probs;
}

}  // namespace

double multinomial3_loglik(const Eigen::Ref<const Eigen::MatrixXd>& design, const Eigen::Ref<const Eigen::VectorXi>& y,
                           const Eigen::Ref<const Eigen::VectorXd>& coefficients) {
  const Eigen::Index p = design.cols();
  Eigen::ArrayXd e1 = (design * coefficients.head(p)).array();
  Eigen::ArrayXd e2 = (design * coefficients.tail(p)).array();
  Eigen::ArrayXd m = e1.max(e2).max(0.0);
  Eigen::ArrayXd lse = m + ((-m).exp() + (e1 - m).exp() + (e2 - m).exp()).log();
  Eigen::ArrayXd eta = (y.array() == 1).cast<double>() * e1 + (y.array() == 2).cast<double>() * e2;
  return (eta - lse).sum();
}

FittedGlm fit_multinomial3(const Eigen::Ref<const Eigen::MatrixXd>& design,
                           const Eigen::Ref<const Eigen::VectorXi>& y, const GlmOptions& options) {
  const Eigen::Index n = design.rows(), p = design.cols();
  if (y.size() != n) throw Error(ErrorCode::DimensionMismatch, "multinomial: outcome length differs from design rows");
  std::array<std::size_t, 3> counts{};
  for (Eigen::Index i = 0; i < n; ++i) {
    if (y[i] < 0 || y[i] > 2) throw Error(ErrorCode::Value, "multinomial: outcome must be in {0,1,2}");
    ++counts[static_cast<std::size_t>(y[i])];
  }
  if (counts[0] == 0 || counts[1] == 0 || counts[2] == 0)
    throw Error(ErrorCode::DegenerateData, "multinomial: an outcome class is absent");
  check_rank(design);

  FittedGlm fit;
  fit.family = GlmFamily::Multinomial3;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(2 * p);
  double ll = multinomial3_loglik(design, y, beta);
  Eigen::MatrixXd info(2 * p, 2 * p);
  bool polished = false;
  double last_step = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter <= options.max_iterations; ++iter) {
    Eigen::MatrixXd probs = softmax3(design, beta);
    Eigen::VectorXd r1(n), r2(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      r1[i] = (y[i] == 1) - probs(i, 1);
      r2[i] = (y[i] == 2) - probs(i, 2);
    }
    Eigen::VectorXd score(2 * p);
    score.head(p) = design.transpose() * r1;
    score.tail(p) = design.transpose() * r2;
    fit.score_norm = score.cwiseAbs().maxCoeff();
    fit.iterations = iter;
    // one extra Newton step after reaching tolerance polishes to rounding level;
    // a small score with steps that stay large means the fit is running off to infinity
    fit.converged = fit.score_norm <= options.tolerance &&
                    (fit.score_norm == 0.0 || last_step <= 1e-4 * (1.0 + beta.cwiseAbs().maxCoeff()));
    if (fit.converged && (polished || fit.score_norm == 0.0)) break;
    if (iter == options.max_iterations) break;
    polished = fit.converged;
    Eigen::VectorXd w11 = probs.col(1).array() * (1.0 - probs.col(1).array());
    Eigen::VectorXd w22 = probs.col(2).array() * (1.0 - probs.col(2).array());
    Eigen::VectorXd w12 = -(probs.col(1).array() * probs.col(2).array());
    info.topLeftCorner(p, p) = design.transpose() * w11.asDiagonal() * design;
    info.bottomRightCorner(p, p) = design.transpose() * w22.asDiagonal() * design;
    info.topRightCorner(p, p) = design.transpose() * w12.asDiagonal() * design;
    info.bottomLeftCorner(p, p) = info.topRightCorner(p, p).transpose();
    Eigen::LLT<Eigen::MatrixXd> llt(info);
    if (llt.info() != Eigen::Success) fail_to_converge(beta, options, "multinomial");
    Eigen::VectorXd step = llt.solve(score);
    double scale = 1.0;
    Eigen::VectorXd candidate = beta + step;
    double ll_new = multinomial3_loglik(design, y, candidate);
    for (int h = 0; h < 30 && !(ll_new >= ll - 1e-12 * std::abs(ll)); ++h) {
      scale *= 0.5;
      candidate = beta + scale * step;
      ll_new = multinomial3_loglik(design, y, candidate);
    }
    last_step = scale * step.cwiseAbs().maxCoeff();
    beta = std::move(candidate);
    ll = ll_new;
  }
  if (!fit.converged) fail_to_converge(beta, options, "multinomial");
  fit.coefficients = std::move(beta);
  fit.loglik = ll;
  return fit;
}

// ---------------------------------------------------------------- prediction

double clamp_probability(double p) noexcept { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

double predict_prob(const FittedGlm& model, std::span<const double> row) {
  if (model.family != GlmFamily::Binomial) throw Error(ErrorCode::Config, "predict_prob needs a binomial model");
  if (row.size() != model.design_width())
    throw Error(ErrorCode::DimensionMismatch, "design row width " + std::to_string(row.size()) +
                                                  " != model width " + std::to_string(model.design_width()));
  Eigen::Map<const Eigen::VectorXd> r(row.data(), static_cast<Eigen::Index>(row.size()));
  return clamp_probability(expit(r.dot(model.coefficients)));
}

std::array<double, 3> predict_prob3(const FittedGlm& model, std::span<const double> row) {
  if (model.family != GlmFamily::Multinomial3)
    throw Error(ErrorCode::Config, "predict_prob3 needs a multinomial model");
  if (row.size() != model.design_width())
    throw Error(ErrorCode::DimensionMismatch, "design row width " + std::to_string(row.size()) +
                                                  " != model width " + std::to_string(model.design_width()));
  Eigen::Map<const Eigen::RowVectorXd> r(row.data(), static_cast<Eigen::Index>(row.size()));
  Eigen::MatrixXd probs = softmax3(r, model.coefficients);
  return {clamp_probability(probs(0, 0)), clamp_probability(probs(0, 1)), clamp_probability(probs(0, 2))};
}

Eigen::VectorXd predict_probs(const FittedGlm& model, const Eigen::Ref<const Eigen::MatrixXd>& design) {
  if (static_cast<std::size_t>(design.cols()) != model.design_width())
    throw Error(ErrorCode::DimensionMismatch, "design width does not match model");
  Eigen::VectorXd eta = design * model.coefficients;
  return eta.unaryExpr([](double t) { return clamp_probability(expit(t)); });
}

Eigen::MatrixXd predict_probs3(const FittedGlm& model, const Eigen::Ref<const Eigen::MatrixXd>& design) {
  if (static_cast<std::size_t>(design.cols()) != model.design_width())
    throw Error(ErrorCode::DimensionMismatch, "design width does not match model");
  return softmax3(design, model.coefficients).unaryExpr([](double p) { return clamp_probability(p); });
}

Eigen::MatrixXd logistic_score_rows(const Eigen::Ref<const Eigen::MatrixXd>& design,
                                    const Eigen::Ref<const Eigen::VectorXd>& y,
                                    const Eigen::Ref<const Eigen::VectorXd>& coefficients, const Eigen::VectorXd* mask) {
  Eigen::VectorXd eta = design * coefficients;
  Eigen::VectorXd resid(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) resid[i] = (y[i] - expit(eta[i])) * (mask ? (*mask)[i] : 1.0);
  return design.array().colwise() * resid.array();
}

Eigen::MatrixXd multinomial3_score_rows(const Eigen::Ref<const Eigen::MatrixXd>& design,
                                        const Eigen::Ref<const Eigen::VectorXi>& y,
                                        const Eigen::Ref<const Eigen::VectorXd>& coefficients,
                                        const Eigen::VectorXd* mask) {
  const Eigen::Index n = design.rows(), p = design.cols();
  Eigen::MatrixXd probs = softmax3(design, coefficients);
  Eigen::ArrayXd r1 = (y.array() == 1).cast<double>() - probs.col(1).array();
  Eigen::ArrayXd r2 = (y.array() == 2).cast<double>() - probs.col(2).array();
  if (mask) {
    r1 *= mask->array();
    r2 *= mask->array();
  }
  Eigen::MatrixXd rows(n, 2 * p);
  rows.leftCols(p) = design.array().colwise() * r1;
  rows.rightCols(p) = design.array().colwise() * r2;
  return rows;
}

}  // namespace tndve
