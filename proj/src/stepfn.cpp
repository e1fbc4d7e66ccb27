#include "cpvar/stepfn.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <string>

namespace cpvar {

StepFunction::StepFunction(double initial_value) : initial_(initial_value) {
  if (!std::isfinite(initial_value)) {
    throw InvalidArgument("step function initial value must be finite");
  }
}

StepFunction::StepFunction(double initial_value, std::vector<Jump> jumps)
    : StepFunction(initial_value) {
  for (const Jump& j : jumps) {
    if (!std::isfinite(j.time) || !std::isfinite(j.size)) {
      throw InvalidArgument("step function jumps must be finite");
    }
    if (j.time <= 0.0) {
      throw InvalidArgument("step function breakpoints must be > 0, got " +
                            std::to_string(j.time));
    }
  }
  std::stable_sort(jumps.begin(), jumps.end(),
                   [](const Jump& a, const Jump& b) { return a.time < b.time; });
  times_.reserve(jumps.size());
  jumps_.reserve(jumps.size());
  for (std::size_t k = 0; k < jumps.size();) {
    const double t = jumps[k].time;
    double total = 0.0;
    for (; k < jumps.size() && jumps[k].time == t; ++k) total += jumps[k].size;
    if (total != 0.0) {
      times_.push_back(t);
      jumps_.push_back(total);
    }
  }
  rebuild_levels();
}

StepFunction StepFunction::from_levels(std::span<const double> times,
                                       std::span<const double> levels) {
  if (times.empty() || times.size() != levels.size()) {
    throw FormatError("step function needs matching, nonempty time/value rows");
  }
  if (times.front() != 0.0) {
    throw FormatError("first step function row must be at time 0");
  }
  std::vector<Jump> jumps;
  for (std::size_t k = 1; k < times.size(); ++k) {
    if (!(times[k] > times[k - 1])) {
      throw FormatError("step function times must be strictly increasing");
    }
    jumps.push_back({times[k], levels[k] - levels[k - 1]});
  }
  StepFunction f(levels.front(), std::move(jumps));
  // keep the given levels rather than the running sums of their differences
  std::size_t k = 1;
  for (std::size_t b = 0; b < f.times_.size(); ++b) {
    while (times[k] != f.times_[b]) ++k;
    f.levels_[b] = levels[k];
  }
  return f;
}

void StepFunction::rebuild_levels() {
  levels_.resize(jumps_.size());
  double level = initial_;
  for (std::size_t k = 0; k < jumps_.size(); ++k) {
    level += jumps_[k];
    levels_[k] = level;
  }
}

double StepFunction::operator()(double t, Side side) const {
  // Number of breakpoints <= t (right) or < t (left limit).
  const auto it = side == Side::right
                      ? std::upper_bound(times_.begin(), times_.end(), t)
                      : std::lower_bound(times_.begin(), times_.end(), t);
  const auto k = static_cast<std::size_t>(it - times_.begin());
  return k == 0 ? initial_ : levels_[k - 1];
}

double StepFunction::jump_at(double t) const {
  const auto it = std::lower_bound(times_.begin(), times_.end(), t);
  if (it == times_.end() || *it != t) return 0.0;
  return jumps_[static_cast<std::size_t>(it - times_.begin())];
}

std::vector<double> StepFunction::values() const {
  std::vector<double> v;
  v.reserve(levels_.size() + 1);
  v.push_back(initial_);
  v.insert(v.end(), levels_.begin(), levels_.end());
  return v;
}

StepFunction StepFunction::truncated(double horizon) const {
  StepFunction out(initial_);
  const auto end = std::upper_bound(times_.begin(), times_.end(), horizon);
  const auto m = static_cast<std::size_t>(end - times_.begin());
  out.times_.assign(times_.begin(), times_.begin() + m);
  out.jumps_.assign(jumps_.begin(), jumps_.begin() + m);
  out.levels_.assign(levels_.begin(), levels_.begin() + m);
  return out;
}

StepFunction StepFunction::scaled(double factor) const {
  std::vector<Jump> j;
  j.reserve(times_.size());
  for (std::size_t k = 0; k < times_.size(); ++k) {
    j.push_back({times_[k], jumps_[k] * factor});
  }
  return StepFunction(initial_ * factor, std::move(j));
}

namespace {

StepFunction combine(const StepFunction& a, const StepFunction& b,
                     double sign) {
  std::vector<Jump> j;
  j.reserve(a.size() + b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    j.push_back({a.breakpoints()[k], a.jumps()[k]});
  }
  for (std::size_t k = 0; k < b.size(); ++k) {
    j.push_back({b.breakpoints()[k], sign * b.jumps()[k]});
  }
  return StepFunction(a.initial_value() + sign * b.initial_value(),
                      std::move(j));
}

}  // namespace

StepFunction operator+(const StepFunction& a, const StepFunction& b) {
  return combine(a, b, 1.0);
}

StepFunction operator-(const StepFunction& a, const StepFunction& b) {
  return combine(a, b, -1.0);
}

double evaluate(const StepFunction& f, double t, Side side) {
  return f(t, side);
}

namespace {

void check_exponent(double p) {
  if (!(p >= 1.0) || !std::isfinite(p)) {
    throw InvalidArgument("p-variation exponent must be >= 1, got " +
                          std::to_string(p));
  }
}

double sup_abs(std::span<const PathPoint> path) {
  double s = 0.0;
  for (const auto& pt : path) s = std::max(s, std::fabs(pt.value));
  return s;
}

void finish(PVarResult& r, std::span<const PathPoint> path) {
  r.seminorm_p = r.v_p == 0.0 ? 0.0 : std::pow(r.v_p, 1.0 / r.p);
  r.sup_norm = sup_abs(path);
  r.norm_p = r.seminorm_p + r.sup_norm;
}

// Indices of the path that can appear in an optimal partition: runs of equal
// values collapse to their first point, interior points of monotone runs go.
std::vector<std::size_t> local_extrema(std::span<const PathPoint> path) {
  std::vector<std::size_t> idx;
  idx.reserve(path.size());
  for (std::size_t k = 0; k < path.size(); ++k) {
    if (idx.empty() || path[k].value != path[idx.back()].value) {
      idx.push_back(k);
    }
  }
  if (idx.size() <= 2) return idx;
  std::vector<std::size_t> out;
  out.reserve(idx.size());
  out.push_back(idx.front());
  for (std::size_t k = 1; k + 1 < idx.size(); ++k) {
    const double prev = path[idx[k - 1]].value;
    const double cur = path[idx[k]].value;
    const double next = path[idx[k + 1]].value;
    if ((cur - prev) * (next - cur) < 0.0) out.push_back(idx[k]);
  }
  out.push_back(idx.back());
  return out;
}

}  // namespace

PVarResult pvar_path(std::span<const PathPoint> path, double p) {
  check_exponent(p);
  PVarResult r;
  r.p = p;
  if (path.empty()) return r;

  const std::vector<std::size_t> keep = local_extrema(path);
  const std::size_t m = keep.size();
  std::vector<double> v(m);
  for (std::size_t k = 0; k < m; ++k) v[k] = path[keep[k]].value;

  // best[j]: largest sum over partitions ending at j. Between consecutive
  // points i < j of an optimal partition every intermediate value lies in
  // [min(v_i, v_j), max(v_i, v_j)] (otherwise inserting the outlier gains).
  // So for an upward step into j, i is a weak suffix minimum of v[..j] that
  // comes after the last strictly higher point; symmetric for downward steps.
  constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
  std::vector<double> best(m, 0.0);
  std::vector<std::size_t> prev(m, none);
  std::vector<std::size_t> minima;  // v nondecreasing bottom -> top
  std::vector<std::size_t> maxima;  // v nonincreasing bottom -> top

  for (std::size_t j = 0; j < m; ++j) {
    const double vj = v[j];
    // Last index with v > vj lives on the maxima stack; likewise for <.
    std::size_t last_higher = none;
    for (auto it = maxima.rbegin(); it != maxima.rend(); ++it) {
      if (v[*it] > vj) {
        last_higher = *it;
        break;
      }
    }
    std::size_t last_lower = none;
    for (auto it = minima.rbegin(); it != minima.rend(); ++it) {
      if (v[*it] < vj) {
        last_lower = *it;
        break;
      }
    }
    double b = 0.0;
    std::size_t arg = none;
    for (auto it = minima.rbegin(); it != minima.rend(); ++it) {
      if (last_higher != none && *it <= last_higher) break;
      const double cand = best[*it] + abs_pow(vj - v[*it], p);
      if (cand > b) {
        b = cand;
        arg = *it;
      }
    }
    for (auto it = maxima.rbegin(); it != maxima.rend(); ++it) {
      if (last_lower != none && *it <= last_lower) break;
      const double cand = best[*it] + abs_pow(vj - v[*it], p);
      if (cand > b) {
        b = cand;
        arg = *it;
      }
    }
    best[j] = b;
    prev[j] = arg;
    while (!minima.empty() && v[minima.back()] > vj) minima.pop_back();
    minima.push_back(j);
    while (!maxima.empty() && v[maxima.back()] < vj) maxima.pop_back();
    maxima.push_back(j);
  }

  std::size_t end = 0;
  for (std::size_t j = 1; j < m; ++j) {
    if (best[j] > best[end]) end = j;
  }
  r.v_p = best[end];
  std::vector<PartitionPoint> part;
  for (std::size_t j = end; j != none; j = prev[j]) {
    part.push_back({path[keep[j]].time, path[keep[j]].side});
  }
  std::reverse(part.begin(), part.end());
  r.partition = std::move(part);
  finish(r, path);
  return r;
}

PVarResult pvar_path_bruteforce(std::span<const PathPoint> path, double p) {
  check_exponent(p);
  if (path.size() > kMaxBruteforceBreakpoints + 1) {
    throw InvalidArgument("brute-force p-variation limited to " +
                          std::to_string(kMaxBruteforceBreakpoints) +
                          " breakpoints");
  }
  PVarResult r;
  r.p = p;
  if (path.empty()) return r;
  const std::size_t m = path.size();
  std::uint64_t best_mask = 1;
  double best = 0.0;
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << m); ++mask) {
    double sum = 0.0;
    std::size_t last = m;
    for (std::size_t k = 0; k < m; ++k) {
      if (!(mask >> k & 1U)) continue;
      if (last != m) sum += abs_pow(path[k].value - path[last].value, p);
      last = k;
    }
    if (sum > best) {
      best = sum;
      best_mask = mask;
    }
  }
  r.v_p = best;
  for (std::size_t k = 0; k < m; ++k) {
    if (best_mask >> k & 1U) r.partition.push_back({path[k].time, path[k].side});
  }
  finish(r, path);
  return r;
}

namespace {

std::vector<PathPoint> value_path(const StepFunction& f) {
  std::vector<PathPoint> path;
  path.reserve(f.size() + 1);
  path.push_back({0.0, Side::right, f.initial_value()});
  for (std::size_t k = 0; k < f.size(); ++k) {
    path.push_back({f.breakpoints()[k], Side::right, f.levels()[k]});
  }
  return path;
}

}  // namespace

PVarResult pvar(const StepFunction& f, double p) {
  const auto path = value_path(f);
  return pvar_path(path, p);
}

PVarResult pvar_bruteforce(const StepFunction& f, double p) {
  if (f.size() > kMaxBruteforceBreakpoints) {
    throw InvalidArgument("brute-force p-variation limited to " +
                          std::to_string(kMaxBruteforceBreakpoints) +
                          " breakpoints, got " + std::to_string(f.size()));
  }
  const auto path = value_path(f);
  return pvar_path_bruteforce(path, p);
}

std::vector<PathPoint> distance_path(const StepFunction& empirical,
                                     const std::function<double(double)>& truth,
                                     double horizon) {
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) {
    throw InvalidArgument("horizon must be finite and >= 0");
  }
  auto eval_truth = [&](double t) {
    const double y = truth(t);
    if (!std::isfinite(y)) {
      throw InvalidArgument("truth not evaluable at t = " + std::to_string(t));
    }
    return y;
  };
  const auto times = empirical.breakpoints();
  const auto levels = empirical.levels();
  std::vector<PathPoint> path;
  path.reserve(2 * times.size() + 2);
  path.push_back(
      {0.0, Side::right, empirical.initial_value() - eval_truth(0.0)});
  double before = empirical.initial_value();
  bool horizon_seen = horizon == 0.0;
  for (std::size_t k = 0; k < times.size() && times[k] <= horizon; ++k) {
    const double t = times[k];
    const double ft = eval_truth(t);
    path.push_back({t, Side::left_limit, before - ft});
    path.push_back({t, Side::right, levels[k] - ft});
    before = levels[k];
    horizon_seen = t == horizon;
  }
  if (!horizon_seen) {
    path.push_back({horizon, Side::right, before - eval_truth(horizon)});
  }
  return path;
}

PVarResult pvar_distance_to_truth(const StepFunction& empirical,
                                  const std::function<double(double)>& truth,
                                  double p, double horizon) {
  check_exponent(p);
  const auto path = distance_path(empirical, truth, horizon);
  return pvar_path(path, p);
}

double product_integral(const StepFunction& cumulative_hazard, double s) {
  const auto times = cumulative_hazard.breakpoints();
  const auto dj = cumulative_hazard.jumps();
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (dj[k] > 1.0) {
      throw InvalidArgument("cumulative hazard jump " + std::to_string(dj[k]) +
                            " exceeds 1 at t = " + std::to_string(times[k]));
    }
  }
  double prod = 1.0;
  for (std::size_t k = 0; k < times.size() && times[k] < s; ++k) {
    prod *= 1.0 - dj[k];
  }
  return prod;
}

}  // namespace cpvar
