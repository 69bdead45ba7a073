#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tndve/data.hpp"

namespace tndve {

enum class TermKind { Intercept, Treatment, Covariate, Interaction };

// Interaction means V * x[index].
struct Term {
  TermKind kind = TermKind::Intercept;
  std::size_t index = 0;

  friend bool operator==(const Term&, const Term&) = default;
};

// Ordered regressor list over (1, V, X, V*X). The intercept is always first.
class DesignSpec {
 public:
  explicit DesignSpec(std::vector<Term> terms);

  static DesignSpec covariates_only(std::size_t dim);  // (1, X)
  static DesignSpec main_effects(std::size_t dim);     // (1, V, X)
  static DesignSpec interacted(std::size_t dim);       // (1, V, X, V*X)

  std::size_t width() const noexcept { return terms_.size(); }
  const std::vector<Term>& terms() const noexcept { return terms_; }
  bool uses_treatment() const noexcept;
  std::optional<std::size_t> treatment_column() const noexcept;
  // Largest covariate index referenced plus one (0 when none).
  std::size_t covariates_required() const noexcept;

  // Drops V and V*X terms, keeping the covariate part in order.
  DesignSpec without_treatment() const;

  void fill_row(std::span<const double> x, int v, double* out) const;
  Eigen::RowVectorXd row(std::span<const double> x, int v) const;

  // One row per record. v_override evaluates every row at a fixed V.
  template <class Record>
  Eigen::MatrixXd matrix(const Dataset<Record>& data, std::optional<int> v_override = std::nullopt) const {
    check_dim(data.covariate_dim());
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> m(data.size(), width());
    for (std::size_t i = 0; i < data.size(); ++i)
      fill_row(data[i].x, v_override.value_or(data[i].v), m.row(static_cast<Eigen::Index>(i)).data());
    return m;
  }

  std::string describe(const std::vector<std::string>& names = {}) const;
  void check_dim(std::size_t covariate_dim) const;

  friend bool operator==(const DesignSpec&, const DesignSpec&) = default;

 private:
  std::vector<Term> terms_;
};

enum class GlmFamily { Binomial, Multinomial3 };

// Binomial: coefficients has the design width. Multinomial3: baseline class
// 0, coefficients = [class-1 block; class-2 block], each of design width.
struct FittedGlm {
  Eigen::VectorXd coefficients;
  bool converged = false;
  int iterations = 0;
  double loglik = 0.0;
  double score_norm = 0.0;
  GlmFamily family = GlmFamily::Binomial;

  std::size_t design_width() const noexcept {
    auto n = static_cast<std::size_t>(coefficients.size());
    return family == GlmFamily::Binomial ? n : n / 2;
  }
};

struct GlmOptions {
  double tolerance = 1e-8;  // absolute max-norm of the score
  int max_iterations = 50;
  double separation_threshold = 30.0;
};

// Newton-Raphson / IRLS logistic regression with step halving. y in {0,1}.
FittedGlm fit_logistic(const Eigen::Ref<const Eigen::MatrixXd>& design, const Eigen::Ref<const Eigen::VectorXd>& y,
                       const Eigen::VectorXd* weights = nullptr, const GlmOptions& options = {});

// Baseline-category multinomial logit. y in {0,1,2}.
FittedGlm fit_multinomial3(const Eigen::Ref<const Eigen::MatrixXd>& design,
                           const Eigen::Ref<const Eigen::VectorXi>& y, const GlmOptions& options = {});

inline constexpr double kProbClamp = 1e-12;

double clamp_probability(double p) noexcept;

double predict_prob(const FittedGlm& model, std::span<const double> row);
std::array<double, 3> predict_prob3(const FittedGlm& model, std::span<const double> row);

// Vectorized predictions, clamped.
Eigen::VectorXd predict_probs(const FittedGlm& model, const Eigen::Ref<const Eigen::MatrixXd>& design);
Eigen::MatrixXd predict_probs3(const FittedGlm& model, const Eigen::Ref<const Eigen::MatrixXd>& design);

// Per-record score contributions (rows) at arbitrary coefficients; used to
// stack nuisance models into estimating equations. `mask` zeroes records
// outside the fitting subsample.
Eigen::MatrixXd logistic_score_rows(const Eigen::Ref<const Eigen::MatrixXd>& design,
                                    const Eigen::Ref<const Eigen::VectorXd>& y,
                                    const Eigen::Ref<const Eigen::VectorXd>& coefficients,
                                    const Eigen::VectorXd* mask = nullptr);
Eigen::MatrixXd multinomial3_score_rows(const Eigen::Ref<const Eigen::MatrixXd>& design,
                                        const Eigen::Ref<const Eigen::VectorXi>& y,
                                        const Eigen::Ref<const Eigen::VectorXd>& coefficients,
                                        const Eigen::VectorXd* mask = nullptr);

double logistic_loglik(const Eigen::Ref<const Eigen::MatrixXd>& design, const Eigen::Ref<const Eigen::VectorXd>& y,
                       const Eigen::Ref<const Eigen::VectorXd>& coefficients, const Eigen::VectorXd* weights = nullptr);
double multinomial3_loglik(const Eigen::Ref<const Eigen::MatrixXd>& design, const Eigen::Ref<const Eigen::VectorXi>& y,
                           const Eigen::Ref<const Eigen::VectorXd>& coefficients);

}  // namespace tndve
