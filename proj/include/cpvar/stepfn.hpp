// Right-continuous step functions on [0, inf) and their p-variation.
#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "cpvar/error.hpp"

namespace cpvar {

enum class Side { right, left_limit };

// Upper limit convention for integrals over (0, s]: `closed` includes s,
// `open` integrates over (0, s) only.
enum class Upper { closed, open };

struct Jump {
  double time;
  double size;
};

/// Immutable right-continuous piecewise-constant function.
///
/// f(t) = initial_value + sum of jumps at breakpoints u <= t. Breakpoints are
/// finite, strictly increasing and > 0; every stored jump is nonzero. The
/// level after the last breakpoint is the value at infinity.
class StepFunction {
 public:
  StepFunction() = default;
  explicit StepFunction(double initial_value);

  // Jumps may be unsorted and may share times; ties are summed and exact
  // zero totals are dropped. Throws InvalidArgument on t <= 0 or non-finite
  // input.
  StepFunction(double initial_value, std::vector<Jump> jumps);

  // Builds a function from (time, level) pairs as found in a step CSV:
  // the first pair must be (0, initial value), times strictly increasing.
  static StepFunction from_levels(std::span<const double> times,
                                  std::span<const double> levels);

  double initial_value() const noexcept { return initial_; }
  std::span<const double> breakpoints() const noexcept { return times_; }
  std::span<const double> jumps() const noexcept { return jumps_; }
  // Level immediately after each breakpoint, f(t_k).
  std::span<const double> levels() const noexcept { return levels_; }
  std::size_t size() const noexcept { return times_.size(); }
  bool empty() const noexcept { return times_.empty(); }

  double final_value() const noexcept {
    return levels_.empty() ? initial_ : levels_.back();
  }

  double operator()(double t, Side side = Side::right) const;

  // Delta f(t); zero away from breakpoints.
  double jump_at(double t) const;

  // Value sequence (f(0), f(t_1), ..., f(t_m)).
  std::vector<double> values() const;

  // Restriction to [0, horizon]; breakpoints beyond horizon are dropped so
  // the tail level becomes f(horizon).
  StepFunction truncated(double horizon) const;

  StepFunction scaled(double factor) const;

  friend StepFunction operator+(const StepFunction& a, const StepFunction& b);
  friend StepFunction operator-(const StepFunction& a, const StepFunction& b);

 private:
  double initial_ = 0.0;
  std::vector<double> times_;
  std::vector<double> jumps_;
  std::vector<double> levels_;

  void rebuild_levels();
};

double evaluate(const StepFunction& f, double t, Side side = Side::right);

// A point of a partition. Left-limit points stand for f(t-), which the
// supremum over partitions approaches but need not attain.
struct PartitionPoint {
  double time;
  Side side;
};

struct PVarResult {
  double p = 1.0;
  double seminorm_p = 0.0;  // v_p^(1/p)
  double v_p = 0.0;
  double sup_norm = 0.0;
  double norm_p = 0.0;  // seminorm_p + sup_norm
  std::vector<PartitionPoint> partition;
};

// A path sampled at the finitely many points that carry all of its extrema.
struct PathPoint {
  double time;
  Side side;
  double value;
};

// |x|^p with |0|^p = 0.
inline double abs_pow(double x, double p) {
  return x == 0.0 ? 0.0 : std::pow(std::fabs(x), p);
}

// Exact p-variation of a finite path: maximum over subsequences of
// sum |v_{i_k} - v_{i_{k-1}}|^p.
PVarResult pvar_path(std::span<const PathPoint> path, double p);

PVarResult pvar(const StepFunction& f, double p);

// Exhaustive enumeration over all subsequences of the value sequence.
// Limited to kMaxBruteforceBreakpoints breakpoints.
inline constexpr std::size_t kMaxBruteforceBreakpoints = 20;
PVarResult pvar_bruteforce(const StepFunction& f, double p);
PVarResult pvar_path_bruteforce(std::span<const PathPoint> path, double p);

// Extrema sequence of F_n - F on [0, horizon] for continuous nondecreasing F.
std::vector<PathPoint> distance_path(const StepFunction& empirical,
                                     const std::function<double(double)>& truth,
                                     double horizon);

// ||F_n - F||_[p] on [0, horizon].
PVarResult pvar_distance_to_truth(const StepFunction& empirical,
                                  const std::function<double(double)>& truth,
                                  double p, double horizon);

// sum over breakpoints 0 < u <= s (closed) or 0 < u < s (open) of
// g(u) * Delta f(u). Pass s = +inf to integrate over all breakpoints.
template <class G>
double stieltjes_integral(G&& g, const StepFunction& f, double s,
                          Upper upper = Upper::closed) {
  double acc = 0.0;
  const auto times = f.breakpoints();
  const auto dj = f.jumps();
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double u = times[k];
    if (u > s || (upper == Upper::open && u == s)) break;
    acc += g(u) * dj[k];
  }
  return acc;
}

// prod over breakpoints u < s of (1 - Delta Lambda(u)): the left-continuous
// survivor of a cumulative hazard. Throws InvalidArgument on a jump > 1.
double product_integral(const StepFunction& cumulative_hazard, double s);

}  // namespace cpvar
