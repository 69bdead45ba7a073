#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "tndve/data.hpp"
#include "tndve/errors.hpp"
#include "tndve/estimate.hpp"
#include "tndve/glm.hpp"
#include "tndve/parallel.hpp"
#include "tndve/rng.hpp"

namespace tndve {

// Stacked estimating equations: residuals(theta) returns one row per record
// and one column per parameter; the estimate solves colwise mean = 0.
struct StackedEE {
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> residuals;
  Eigen::VectorXd theta;
  Eigen::Index psi_index = 0;

  Eigen::VectorXd mean_residual(const Eigen::VectorXd& at) const;
};

StackedEE stack_estimator(const TndDataset& data, Estimator e, const DesignSpec& spec);
StackedEE stack_estimator(const CohortDataset& data, Estimator e, const DesignSpec& spec,
                          const CohortOptions& options = {});

// Outcome-model stack with per-record multipliers on the denominator terms
// (the sensitivity tilt e^{eta q(X)}); psi_hat must be the matching estimate.
StackedEE stack_tnd_om_weighted(const TndDataset& data, const DesignSpec& spec, const Eigen::VectorXd& weights,
                                double psi_hat);

enum class CiMethod { None, Sandwich, Bootstrap };
enum class CiScale { Natural, Log };

std::string_view ci_method_label(CiMethod m) noexcept;
CiMethod parse_ci_method(std::string_view label);

struct CiReport {
  double psi = 0.0;
  double se = 0.0;
  ConfidenceInterval ci;
  CiScale scale = CiScale::Natural;
  CiMethod method = CiMethod::Sandwich;
  double level = 0.95;
  int replicates = 0;  // bootstrap only
  int failures = 0;    // bootstrap only
};

// Normal interval psi +- z se, or exp(log psi +- z se/psi) on the log scale.
ConfidenceInterval normal_interval(double psi, double se, double level, CiScale scale);

struct SandwichParts {
  Eigen::MatrixXd v1;          // mean Jacobian of the stacked residuals
  Eigen::MatrixXd v2;          // mean outer product of residuals
  Eigen::MatrixXd covariance;  // V1^-1 V2 V1^-T (asymptotic, not divided by n)
  double residual_norm = 0.0;  // max-norm of the mean residual at theta
  std::size_t n = 0;
};

SandwichParts sandwich_parts(const StackedEE& stack);
CiReport sandwich_ci(const StackedEE& stack, double level = 0.95, CiScale scale = CiScale::Natural);
CiReport sandwich_ci(const TndDataset& data, Estimator e, const DesignSpec& spec, double level = 0.95,
                     CiScale scale = CiScale::Natural);
CiReport sandwich_ci(const CohortDataset& data, Estimator e, const DesignSpec& spec, double level = 0.95,
                     CiScale scale = CiScale::Natural, const CohortOptions& options = {});

struct BootstrapOptions {
  int replicates = 1000;
  std::uint64_t seed = 20240101;
  unsigned workers = 1;
  double level = 0.95;
  CiScale scale = CiScale::Natural;
  double max_failure_fraction = 0.10;
};

struct BootstrapDraws {
  std::vector<double> estimates;  // successful replicates, in replicate order
  int failures = 0;
};

// Resamples records with replacement and re-runs `estimator` on each draw.
// Draw b, slot j takes record floor(u * n) with u keyed by (seed, b, j).
template <class Record>
BootstrapDraws bootstrap_draws(const Dataset<Record>& data, const std::function<double(const Dataset<Record>&)>& estimator,
                               const BootstrapOptions& options) {
  if (options.replicates < 2) throw Error(ErrorCode::Config, "bootstrap needs at least 2 replicates");
  const std::size_t n = data.size();
  const auto b_count = static_cast<std::size_t>(options.replicates);
  std::vector<std::optional<double>> slots(b_count);
  KeyedUniform uniform(options.seed);
  parallel_for(b_count, options.workers, [&](std::size_t b) {
    std::vector<Record> rows;
    rows.reserve(n);
    for (std::size_t j = 0; j < n; ++j) {
      auto k = static_cast<std::size_t>(uniform(b, j, Stream::Resample) * static_cast<double>(n));
      rows.push_back(data[std::min(k, n - 1)]);
    }
    try {
      double psi = estimator(Dataset<Record>(data.covariate_dim(), std::move(rows)));
      if (std::isfinite(psi)) slots[b] = psi;
    } catch (const Error&) {
    }
  });
  BootstrapDraws out;
  for (const auto& s : slots) {
    if (s)
      out.estimates.push_back(*s);
    else
      ++out.failures;
  }
  if (out.failures > options.max_failure_fraction * options.replicates)
    throw Error(ErrorCode::TooManyFailures, std::to_string(out.failures) + " of " +
                                                std::to_string(options.replicates) + " bootstrap replicates failed");
  if (out.estimates.size() < 2) throw Error(ErrorCode::TooManyFailures, "fewer than 2 bootstrap replicates succeeded");
  return out;
}

// Sample SD of the draws (divisor B - 1) and the normal interval around psi_hat.
CiReport bootstrap_report(double psi_hat, const BootstrapDraws& draws, const BootstrapOptions& options);

CiReport bootstrap_ci(const TndDataset& data, Estimator e, const DesignSpec& spec, const BootstrapOptions& options);
CiReport bootstrap_ci(const CohortDataset& data, Estimator e, const DesignSpec& spec, const BootstrapOptions& options,
                      const CohortOptions& cohort_options = {});

}  // namespace tndve
