// Mean-function estimators for recurrent events under three observation
// schemes, with plug-in influence functions and variance estimates.
#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "cpvar/process.hpp"
#include "cpvar/stepfn.hpp"

namespace cpvar {

/// Estimator output on [0, horizon].
///
/// `k_hat` stores the right-continuous K-hat(s+); the censoring survivor
/// used by the estimators is its left limit, K-hat(s) = k_hat(s-). The
/// influence matrix holds mu'_{F_n}(delta_{X_i} - F_n; s) for subject i and
/// grid point s, row-major.
struct EstimateCurve {
  DesignKind design = DesignKind::uncensored;
  double horizon = 0.0;
  std::size_t n = 0;
  StepFunction mu_hat;
  StepFunction k_hat;
  std::optional<StepFunction> lambda_hat;
  std::vector<double> grid;
  std::vector<double> mu_at_grid;
  std::vector<double> k_at_grid;  // K-hat(s), left-continuous
  std::vector<double> variance;   // n^-1 sum_i influence(i, s)^2
  std::vector<double> influence;

  double influence_at(std::size_t subject, std::size_t g) const {
    return influence[subject * grid.size() + g];
  }
  // Standard error of mu-hat(s): sqrt(variance / n).
  double se(std::size_t g) const {
    return std::sqrt(variance[g] / static_cast<double>(n));
  }
};

// The plain average of fully observed paths.
// An empty grid selects every jump of mu-hat in (0, horizon] plus horizon.
EstimateCurve mean_uncensored(std::span<const CountingPath> paths,
                              double horizon, std::vector<double> grid = {});

// K-hat(s) = n^-1 #{C_i >= s}.
double k_hat_observed(const Sample& sample, double s);

// IPCW estimator with every censoring time observed.
EstimateCurve mu_ipcw_observed(const Sample& sample, double horizon,
                               std::vector<double> grid = {});

struct CensoringFit {
  StepFunction lambda_hat;   // cumulative censoring hazard
  StepFunction k_hat_right;  // K-hat(s+)

  // K-hat(s) = prod_{u < s} (1 - Delta Lambda-hat(u)).
  double k_hat(double s) const { return k_hat_right(s, Side::left_limit); }
};

// Censoring hazard from censoring times that are themselves censored by a
// terminal event, and its product-limit survivor. Jumps up to `horizon`.
CensoringFit censoring_hazard_and_khat(const Sample& sample, double horizon);

// IPCW estimator with K-hat from censoring_hazard_and_khat.
EstimateCurve mu_ipcw_censored(const Sample& sample, double horizon,
                               std::vector<double> grid = {});

// Dispatch on design; `uncensored` uses the sample's paths only.
EstimateCurve estimate(const Sample& sample, DesignKind design, double horizon,
                       std::vector<double> grid = {});

// mu-hat(t) alone, skipping the influence computation.
double point_estimate(const Sample& sample, DesignKind design, double t);

}  // namespace cpvar
