// Parametric truths for simulation: homogeneous Poisson events stopped at an
// exponential terminal time, exponential censoring, optional binary covariate.
#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "cpvar/process.hpp"

namespace cpvar {

struct CovariateMix {
  double z_prob = 0.5;      // P(Z = 1)
  double multiplier = 2.0;  // event rate for Z = 1 relative to Z = 0
};

struct TruthSpec {
  double event_rate = 1.0;     // lambda for Z = 0
  double censor_rate = 0.0;    // 0: no censoring
  double terminal_rate = 0.0;  // 0: no terminal event
  double horizon = 1.0;        // tau; events and follow-up stop here
  std::optional<CovariateMix> covariate;
  std::optional<int> event_cap;  // stop the process after this many events

  void validate() const;
  double rate_for(double z) const;
  double mean_rate() const;         // E lambda_Z
  double second_moment_rate() const;  // E lambda_Z^2
};

// Full draw for one subject; `events` is the uncensored path on (0, tau ^ T].
struct LatentSubject {
  std::vector<double> events;
  double terminal = INFINITY;
  double censor = INFINITY;
  std::optional<double> z;
};

// mu(s) = E N(s), s in [0, tau].
double true_mean(const TruthSpec& truth, double s);
// E(N(s) | Z = z).
double true_mean_given_z(const TruthSpec& truth, double z, double s);

// Var N(s) and Var(N(s) - N(u)) for u <= s; no event cap.
double true_variance(const TruthSpec& truth, double s);
double true_increment_variance(const TruthSpec& truth, double u, double s);

// Influence function of the design's estimator at the true nuisance
// functions, evaluated on the latent data.
double influence_at_truth(const LatentSubject& x, const TruthSpec& truth,
                          double s, DesignKind design);

// Asymptotic variance of sqrt(n)(mu-hat(s) - mu(s)) by quadrature.
double asymptotic_variance_oracle(const TruthSpec& truth, double s,
                                  DesignKind design);

// The term subtracted from the observed-design variance when the censoring
// times are themselves censored by the terminal event.
double censored_design_variance_gain(const TruthSpec& truth, double s);

}  // namespace cpvar
