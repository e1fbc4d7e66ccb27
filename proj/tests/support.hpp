// Shared helpers for the unit and acceptance suites.
#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "cpvar/stepfn.hpp"

namespace cpvar::testing {

// Random step function with at most max_breaks breakpoints in (0, 10] and
// levels in [lo, hi].
inline StepFunction random_step(std::mt19937_64& rng, int max_breaks,
                                double lo = -2.0, double hi = 2.0) {
  std::uniform_int_distribution<int> count(0, max_breaks);
  std::uniform_real_distribution<double> level(lo, hi);
  std::uniform_real_distribution<double> time(0.0, 10.0);
  const int m = count(rng);
  std::vector<double> times{0.0};
  for (int k = 0; k < m; ++k) times.push_back(time(rng));
  std::sort(times.begin() + 1, times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  std::vector<double> levels;
  for (std::size_t k = 0; k < times.size(); ++k) levels.push_back(level(rng));
  return StepFunction::from_levels(times, levels);
}

// O(m^2) DP over every pair of indices; no pruning, no candidate filtering.
inline double plain_dp(const std::vector<double>& v, double p) {
  std::vector<double> best(v.size(), 0.0);
  double top = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j) {
    for (std::size_t i = 0; i < j; ++i) {
      best[j] = std::max(best[j], best[i] + std::pow(std::fabs(v[j] - v[i]), p));
    }
    top = std::max(top, best[j]);
  }
  return top;
}

inline bool rel_close(double a, double b, double rel) {
  return std::fabs(a - b) <= rel * std::max({1.0, std::fabs(a), std::fabs(b)});
}

}  // namespace cpvar::testing

#include "cpvar/process.hpp"

namespace cpvar::testing {

// Dataset A: subject 1 events {1}, C = 4; subject 2 events {2}, C = 2.
inline Sample dataset_a() {
  return Sample({
      Subject{1, CountingPath({1.0}), ObservedCensoring{4.0}, std::nullopt},
      Subject{2, CountingPath({2.0}), ObservedCensoring{2.0}, std::nullopt},
  });
}

// Dataset B: ({0.5}, 1, 1), ({}, 2, 0), ({1.5}, 3, 1).
inline Sample dataset_b() {
  return Sample({
      Subject{1, CountingPath({0.5}), CensoredCensoring{1.0, true}, std::nullopt},
      Subject{2, CountingPath(), CensoredCensoring{2.0, false}, std::nullopt},
      Subject{3, CountingPath({1.5}), CensoredCensoring{3.0, true}, std::nullopt},
  });
}

}  // namespace cpvar::testing
