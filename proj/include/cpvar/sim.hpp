// Scenario simulation and the Monte Carlo studies.
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cpvar/process.hpp"
#include "cpvar/truth.hpp"

namespace cpvar {

/// Counter-based random stream: the k-th output is SplitMix64 applied to
/// key + k * golden-gamma, with the key derived from (seed, replication,
/// subject). Streams for different triples are independent in practice and
/// any draw can be reproduced without replaying the others.
class Stream {
 public:
  Stream(std::uint64_t seed, std::uint64_t replication, std::uint64_t subject);

  std::uint64_t next();
  double uniform();  // in (0, 1)
  // Exp(rate); +inf when rate == 0.
  double exponential(double rate);
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

struct Scenario {
  TruthSpec truth;
  std::size_t n = 100;
  std::uint64_t seed = 1;
  DesignKind design = DesignKind::observed;
};

struct Generated {
  Sample sample;
  std::vector<LatentSubject> latent;
};

LatentSubject draw_subject(const TruthSpec& truth, Stream& stream);

// What the design lets the analyst see of a latent subject.
Subject observe(const LatentSubject& x, const TruthSpec& truth,
                DesignKind design, std::int64_t id);

// Subject i uses Stream(seed, replication, i); ids are 1..n.
Generated generate(const Scenario& scenario, std::uint64_t replication = 0);

// Ordinary least squares slope of log y on log x.
double log_log_slope(const std::vector<double>& x, const std::vector<double>& y);

struct ConvergenceReport {
  double p = 1.5;
  std::vector<std::size_t> n_list;
  std::size_t replications = 0;
  std::vector<double> mean_stat;  // mean of the statistic per n
  std::vector<double> se_stat;    // its Monte Carlo standard error
  double fitted_slope = 0.0;
  double theoretical_slope = 0.0;
};

// Mean of ||F_n - mu||_[p] on [0, tau] over uncensored samples; theoretical
// slope (1 - p) / p.
ConvergenceReport convergence_study(const TruthSpec& truth, double p,
                                    const std::vector<std::size_t>& n_list,
                                    std::size_t replications, std::uint64_t seed,
                                    unsigned threads = 1);

// Mean of v_p(F_n - F) for the empirical CDF of one Uniform(0, tau) event
// time per subject; theoretical slope 1 - p.
ConvergenceReport prop1_study(double tau, double p,
                              const std::vector<std::size_t>& n_list,
                              std::size_t replications, std::uint64_t seed,
                              unsigned threads = 1);

struct AsBoundReport {
  double p = 1.5;
  std::size_t n_max = 0;
  std::size_t window_start = 100;
  std::vector<double> r;  // r[n-1] = n^{(p-1)/p} ||F_n - mu||_[p]
  double max_in_window = 0.0;
  std::size_t argmax = 0;
  std::size_t last_new_max = 0;  // last n in the window that set a running max
  bool stabilized = false;       // last_new_max in the first half of the window
};

// One growing sample n = 1..n_max from a capped (bounded) process.
AsBoundReport as_bound_study(const TruthSpec& truth, double p,
                             std::size_t n_max, std::uint64_t seed,
                             std::size_t window_start = 100);

struct DesignSummary {
  DesignKind design = DesignKind::observed;
  std::size_t succeeded = 0;
  std::size_t failed = 0;
  std::vector<double> estimate;  // per replication; NaN on failure
  std::vector<double> plugin_variance;
  double coverage = 0.0;
  double mean_plugin_variance = 0.0;
  double empirical_variance = 0.0;  // of sqrt(n)(mu-hat - mu)
  double variance_ratio = 0.0;      // mean plug-in / empirical
  double oracle_variance = 0.0;
};

struct CoverageReport {
  TruthSpec truth;
  double t = 0.0;
  std::size_t n = 0;
  std::size_t replications = 0;
  double true_mean = 0.0;
  DesignSummary primary;
  // Filled for terminal-event truths: the other censoring design on the
  // same latent draws.
  std::optional<DesignSummary> companion;
  // Observed-design minus censored-design quantities (companion only).
  double oracle_gap = 0.0;
  double plugin_gap_mean = 0.0;
  double plugin_gap_se = 0.0;
  double empirical_gap = 0.0;
  double empirical_gap_se = 0.0;
};

CoverageReport coverage_and_variance_study(const TruthSpec& truth,
                                           DesignKind design, double t,
                                           std::size_t n,
                                           std::size_t replications,
                                           std::uint64_t seed,
                                           unsigned threads = 1);

}  // namespace cpvar
