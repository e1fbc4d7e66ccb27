// Jackknife pseudo-observations of mu-hat(t) and a group-mean check of their
// conditional unbiasedness given a binary covariate.
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cpvar/process.hpp"
#include "cpvar/truth.hpp"

namespace cpvar {

struct PseudoSet {
  double t = 0.0;
  DesignKind kind = DesignKind::uncensored;
  double full_estimate = 0.0;  // mu-hat_n(t)
  std::vector<double> values;  // n mu-hat_n(t) - (n-1) mu-hat_n^(i)(t)
  std::vector<std::int64_t> ids;
  std::vector<std::optional<double>> z;
};

// Naive leave-one-out recomputation of the estimator for `kind`.
PseudoSet pseudo_values(const Sample& sample, double t, DesignKind kind,
                        unsigned threads = 1);

struct GroupCheck {
  double z = 0.0;
  std::size_t count = 0;
  double mean = 0.0;   // mean pseudo-value in the group
  double se = 0.0;     // its Monte Carlo standard error
  double truth = 0.0;  // E(N(t) | Z = z)
  double studentized = 0.0;
};

struct UnbiasednessReport {
  PseudoSet pseudo;
  double mean_pseudo = 0.0;  // compare with pseudo.full_estimate
  std::vector<GroupCheck> groups;  // z = 0 then z = 1
};

UnbiasednessReport conditional_unbiasedness_check(const Sample& sample,
                                                  double t, DesignKind kind,
                                                  const TruthSpec& truth,
                                                  unsigned threads = 1);

}  // namespace cpvar
