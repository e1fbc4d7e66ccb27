#include "cpvar/estimators.hpp"

#include <algorithm>
#include <string>

#include "cpvar/csv.hpp"
#include "cpvar/error.hpp"

namespace cpvar {

namespace {

void check_horizon(double horizon) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw InvalidArgument("horizon must be finite and > 0");
  }
}

// Distinct observed event times u <= horizon with Delta nu-hat(u).
struct NuJumps {
  std::vector<double> times;
  std::vector<double> count;  // events at each time
  std::vector<double> dnu;    // count / n

  // Number of jumps at times <= t.
  std::size_t count_upto(double t) const {
    return static_cast<std::size_t>(
        std::upper_bound(times.begin(), times.end(), t) - times.begin());
  }
  std::size_t index_of(double t) const {
    return static_cast<std::size_t>(
        std::lower_bound(times.begin(), times.end(), t) - times.begin());
  }
};

template <class PathOf>
NuJumps nu_jumps(std::size_t n, PathOf&& path_of, double horizon) {
  std::vector<double> all;
  for (std::size_t i = 0; i < n; ++i) {
    for (double t : path_of(i).event_times()) {
      if (t <= horizon) all.push_back(t);
    }
  }
  std::sort(all.begin(), all.end());
  NuJumps nu;
  const double dn = static_cast<double>(n);
  for (std::size_t k = 0; k < all.size();) {
    std::size_t e = k;
    while (e < all.size() && all[e] == all[k]) ++e;
    nu.times.push_back(all[k]);
    nu.count.push_back(static_cast<double>(e - k));
    nu.dnu.push_back(static_cast<double>(e - k) / dn);
    k = e;
  }
  return nu;
}

// mu-hat with levels sum_{u <= s} Delta nu(u) / K(u), summed as integer
// event counts over runs of equal K so that K = 1 gives exactly count / n.
StepFunction ipcw_mean(const NuJumps& nu, const std::vector<double>& khat,
                       std::size_t n) {
  const double dn = static_cast<double>(n);
  std::vector<double> times{0.0};
  std::vector<double> levels{0.0};
  double closed = 0.0;
  double run = 0.0;
  double k = 1.0;
  for (std::size_t j = 0; j < nu.times.size(); ++j) {
    if (khat[j] != k) {
      closed += (run / dn) / k;
      run = 0.0;
      k = khat[j];
    }
    run += nu.count[j];
    times.push_back(nu.times[j]);
    levels.push_back(closed + (run / dn) / k);
  }
  return StepFunction::from_levels(times, levels);
}

StepFunction step_from(const std::vector<double>& times,
                       const std::vector<double>& jumps) {
  std::vector<Jump> j;
  j.reserve(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) j.push_back({times[k], jumps[k]});
  return StepFunction(0.0, std::move(j));
}

std::vector<double> resolve_grid(std::vector<double> grid,
                                 const NuJumps& nu, double horizon) {
  if (grid.empty()) {
    grid = nu.times;
    grid.push_back(horizon);
  }
  for (double s : grid) {
    if (!(s >= 0.0) || s > horizon) {
      throw InvalidArgument("grid point " + csv::format(s) +
                            " outside [0, horizon]");
    }
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

void finish_variance(EstimateCurve& c) {
  const std::size_t g = c.grid.size();
  c.variance.assign(g, 0.0);
  for (std::size_t i = 0; i < c.n; ++i) {
    for (std::size_t k = 0; k < g; ++k) {
      const double v = c.influence[i * g + k];
      c.variance[k] += v * v;
    }
  }
  for (auto& v : c.variance) v /= static_cast<double>(c.n);
}

// Observed-censoring fit shared by the estimator and point estimates.
struct ObservedFit {
  std::size_t n = 0;
  NuJumps nu;
  std::vector<double> censor_sorted;
  std::vector<double> khat_at_jump;  // K-hat(u) at each nu jump
  StepFunction mu_hat;

  double khat(double s) const {
    const auto below = std::lower_bound(censor_sorted.begin(),
                                        censor_sorted.end(), s) -
                       censor_sorted.begin();
    return static_cast<double>(n - static_cast<std::size_t>(below)) /
           static_cast<double>(n);
  }
};

const ObservedCensoring& observed_design(const Subject& s) {
  const auto* d = std::get_if<ObservedCensoring>(&s.design);
  if (d == nullptr) {
    throw InvalidArgument("estimator needs observed censoring times (subject " +
                          std::to_string(s.id) + ")");
  }
  return *d;
}

const CensoredCensoring& censored_design(const Subject& s) {
  const auto* d = std::get_if<CensoredCensoring>(&s.design);
  if (d == nullptr) {
    throw InvalidArgument(
        "estimator needs (c_tilde, d_tilde) censoring records (subject " +
        std::to_string(s.id) + ")");
  }
  return *d;
}

ObservedFit fit_observed(const Sample& sample, double horizon) {
  check_horizon(horizon);
  ObservedFit fit;
  fit.n = sample.size();
  for (const auto& s : sample.subjects()) {
    fit.censor_sorted.push_back(observed_design(s).c);
  }
  std::sort(fit.censor_sorted.begin(), fit.censor_sorted.end());
  if (fit.khat(horizon) <= 0.0) {
    throw RiskSetError("insufficient follow-up before horizon " +
                       csv::format(horizon) + ": no censoring time >= horizon");
  }
  fit.nu = nu_jumps(
      fit.n, [&](std::size_t i) -> const CountingPath& { return sample[i].path; },
      horizon);
  for (double u : fit.nu.times) fit.khat_at_jump.push_back(fit.khat(u));
  fit.mu_hat = ipcw_mean(fit.nu, fit.khat_at_jump, fit.n);
  return fit;
}

// Censored-censoring fit.
struct CensoredFit {
  std::size_t n = 0;
  NuJumps nu;
  std::vector<double> lambda_times;
  std::vector<double> dlambda;
  std::vector<double> kcirc;         // K-hat-circ at each Lambda jump
  std::vector<double> k_after;       // K-hat(v+) at each Lambda jump
  std::vector<double> khat_at_jump;  // K-hat(u) at each nu jump
  StepFunction mu_hat;

  // K-hat(s): product over Lambda jumps strictly before s.
  double khat(double s) const {
    const auto j = static_cast<std::size_t>(
        std::lower_bound(lambda_times.begin(), lambda_times.end(), s) -
        lambda_times.begin());
    return j == 0 ? 1.0 : k_after[j - 1];
  }
};

CensoredFit fit_censored(const Sample& sample, double horizon) {
  check_horizon(horizon);
  CensoredFit fit;
  fit.n = sample.size();
  const double dn = static_cast<double>(fit.n);
  std::vector<double> ct;
  std::vector<double> observed_c;  // c_tilde with d_tilde = 1, within horizon
  for (const auto& s : sample.subjects()) {
    const auto& d = censored_design(s);
    ct.push_back(d.c_tilde);
    if (d.d_tilde && d.c_tilde <= horizon) observed_c.push_back(d.c_tilde);
  }
  std::sort(ct.begin(), ct.end());
  std::sort(observed_c.begin(), observed_c.end());

  double k = 1.0;
  for (std::size_t a = 0; a < observed_c.size();) {
    std::size_t b = a;
    while (b < observed_c.size() && observed_c[b] == observed_c[a]) ++b;
    const double v = observed_c[a];
    const auto greater = static_cast<std::size_t>(
        ct.end() - std::upper_bound(ct.begin(), ct.end(), v));
    const double d1 = static_cast<double>(b - a);
    const double kc = (static_cast<double>(greater) + d1) / dn;
    const double dl = (d1 / dn) / kc;
    fit.lambda_times.push_back(v);
    fit.dlambda.push_back(dl);
    fit.kcirc.push_back(kc);
    k *= 1.0 - dl;
    fit.k_after.push_back(k);
    a = b;
  }

  fit.nu = nu_jumps(
      fit.n, [&](std::size_t i) -> const CountingPath& { return sample[i].path; },
      horizon);
  for (std::size_t j = 0; j < fit.nu.times.size(); ++j) {
    const double u = fit.nu.times[j];
    const double kh = fit.khat(u);
    if (!(kh > 0.0)) {
      throw RiskSetError(
          "censoring survivor estimate is 0 at event time " +
          csv::format(u) + " (horizon " + csv::format(horizon) + ")");
    }
    fit.khat_at_jump.push_back(kh);
  }
  fit.mu_hat = ipcw_mean(fit.nu, fit.khat_at_jump, fit.n);
  return fit;
}

StepFunction k_right_from(const CensoredFit& fit) {
  std::vector<double> times{0.0};
  std::vector<double> levels{1.0};
  times.insert(times.end(), fit.lambda_times.begin(), fit.lambda_times.end());
  levels.insert(levels.end(), fit.k_after.begin(), fit.k_after.end());
  return StepFunction::from_levels(times, levels);
}

// Adds sum over subject events e <= s of 1 / K-hat(e) at each grid point.
template <class KhatAtJump>
void add_weighted_events(const CountingPath& path, const NuJumps& nu,
                         KhatAtJump&& khat_at, std::span<const double> grid,
                         std::span<double> out) {
  const auto times = path.event_times();
  std::size_t e = 0;
  double acc = 0.0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    while (e < times.size() && times[e] <= grid[g]) {
      acc += 1.0 / khat_at(nu.index_of(times[e]));
      ++e;
    }
    out[g] += acc;
  }
}

}  // namespace

EstimateCurve mean_uncensored(std::span<const CountingPath> paths,
                              double horizon, std::vector<double> grid) {
  check_horizon(horizon);
  if (paths.empty()) throw InvalidArgument("no paths to average");
  EstimateCurve c;
  c.design = DesignKind::uncensored;
  c.horizon = horizon;
  c.n = paths.size();
  const NuJumps nu = nu_jumps(
      c.n, [&](std::size_t i) -> const CountingPath& { return paths[i]; },
      horizon);
  c.mu_hat = ipcw_mean(nu, std::vector<double>(nu.times.size(), 1.0), c.n);
  c.k_hat = StepFunction(1.0);
  c.grid = resolve_grid(std::move(grid), nu, horizon);
  const std::size_t g = c.grid.size();
  for (double s : c.grid) {
    c.mu_at_grid.push_back(c.mu_hat(s));
    c.k_at_grid.push_back(1.0);
  }
  c.influence.assign(c.n * g, 0.0);
  for (std::size_t i = 0; i < c.n; ++i) {
    for (std::size_t k = 0; k < g; ++k) {
      c.influence[i * g + k] = paths[i](c.grid[k]) - c.mu_at_grid[k];
    }
  }
  finish_variance(c);
  return c;
}

double k_hat_observed(const Sample& sample, double s) {
  std::size_t at_risk = 0;
  for (const auto& subj : sample.subjects()) {
    if (observed_design(subj).c >= s) ++at_risk;
  }
  return static_cast<double>(at_risk) / static_cast<double>(sample.size());
}

EstimateCurve mu_ipcw_observed(const Sample& sample, double horizon,
                               std::vector<double> grid) {
  const ObservedFit fit = fit_observed(sample, horizon);
  EstimateCurve c;
  c.design = DesignKind::observed;
  c.horizon = horizon;
  c.n = fit.n;
  c.mu_hat = fit.mu_hat;
  {
    std::vector<double> times{0.0};
    std::vector<double> levels{1.0};
    const auto& cs = fit.censor_sorted;
    for (std::size_t a = 0; a < cs.size();) {
      std::size_t b = a;
      while (b < cs.size() && cs[b] == cs[a]) ++b;
      times.push_back(cs[a]);
      levels.push_back(static_cast<double>(cs.size() - b) /
                       static_cast<double>(c.n));
      a = b;
    }
    c.k_hat = StepFunction::from_levels(times, levels);
  }
  c.grid = resolve_grid(std::move(grid), fit.nu, horizon);
  const std::size_t g = c.grid.size();
  for (double s : c.grid) {
    c.mu_at_grid.push_back(c.mu_hat(s));
    c.k_at_grid.push_back(fit.khat(s));
  }

  // influence_i(s) = sum_{u <= s} Delta n_i(u) / K(u)
  //                - sum_{u <= min(s, C_i)} Delta nu(u) / K(u)^2
  const std::size_t m = fit.nu.times.size();
  std::vector<double> weighted(m);
  double acc = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    acc += fit.nu.dnu[k] / (fit.khat_at_jump[k] * fit.khat_at_jump[k]);
    weighted[k] = acc;
  }
  c.influence.assign(c.n * g, 0.0);
  for (std::size_t i = 0; i < c.n; ++i) {
    std::span<double> row(c.influence.data() + i * g, g);
    add_weighted_events(sample[i].path, fit.nu,
                        [&](std::size_t k) { return fit.khat_at_jump[k]; },
                        c.grid, row);
    const double ci = observed_design(sample[i]).c;
    for (std::size_t k = 0; k < g; ++k) {
      const std::size_t upto = fit.nu.count_upto(std::min(c.grid[k], ci));
      if (upto > 0) row[k] -= weighted[upto - 1];
    }
  }
  finish_variance(c);
  return c;
}

CensoringFit censoring_hazard_and_khat(const Sample& sample, double horizon) {
  const CensoredFit fit = fit_censored(sample, horizon);
  return {step_from(fit.lambda_times, fit.dlambda), k_right_from(fit)};
}

EstimateCurve mu_ipcw_censored(const Sample& sample, double horizon,
                               std::vector<double> grid) {
  const CensoredFit fit = fit_censored(sample, horizon);
  EstimateCurve c;
  c.design = DesignKind::censored;
  c.horizon = horizon;
  c.n = fit.n;
  c.mu_hat = fit.mu_hat;
  c.lambda_hat = step_from(fit.lambda_times, fit.dlambda);
  c.k_hat = k_right_from(fit);
  c.grid = resolve_grid(std::move(grid), fit.nu, horizon);
  const std::size_t g = c.grid.size();
  for (double s : c.grid) {
    c.mu_at_grid.push_back(c.mu_hat(s));
    c.k_at_grid.push_back(fit.khat(s));
  }

  // With dmu(u) = Delta nu(u) / K(u), q(v) = Delta Lambda(v) /
  // (K-circ(v) (1 - Delta Lambda(v))) and Q its running sum,
  //   influence_i(s) = sum_{u <= s} Delta n_i(u) / K(u) - mu(s)
  //                  - R(min(s, c_i))
  //                  + 1{s > c_i} (d_i J_i - q_i) (mu(s) - mu(c_i)),
  // where R(x) = sum_{u <= x} Q(u-) dmu(u), J_i = 1 / (K-circ(c_i)
  // (1 - Delta Lambda(c_i))) and q_i = Q(c_i) if d_i = 1, Q(c_i-) otherwise.
  // This is the derivative of the functional at F_n in direction
  // delta_{X_i} - F_n, with the at-risk indicator 1{c > v} + 1{c = v, d = 1}.
  const std::size_t nl = fit.lambda_times.size();
  std::vector<double> qsum(nl);
  {
    double acc = 0.0;
    for (std::size_t l = 0; l < nl; ++l) {
      acc += fit.dlambda[l] / (fit.kcirc[l] * (1.0 - fit.dlambda[l]));
      qsum[l] = acc;
    }
  }
  auto lambda_index = [&](double t) {
    return static_cast<std::size_t>(
        std::lower_bound(fit.lambda_times.begin(), fit.lambda_times.end(), t) -
        fit.lambda_times.begin());
  };
  const std::size_t m = fit.nu.times.size();
  std::vector<double> rsum(m);
  {
    double acc = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      const std::size_t j = lambda_index(fit.nu.times[k]);
      const double q_before = j == 0 ? 0.0 : qsum[j - 1];
      acc += q_before * fit.nu.dnu[k] / fit.khat_at_jump[k];
      rsum[k] = acc;
    }
  }

  c.influence.assign(c.n * g, 0.0);
  for (std::size_t i = 0; i < c.n; ++i) {
    std::span<double> row(c.influence.data() + i * g, g);
    add_weighted_events(sample[i].path, fit.nu,
                        [&](std::size_t k) { return fit.khat_at_jump[k]; },
                        c.grid, row);
    const auto& d = censored_design(sample[i]);
    const double ci = d.c_tilde;
    double coef = 0.0;  // d_i J_i - q_i, only needed when c_i < horizon
    if (ci < horizon) {
      const std::size_t j = lambda_index(ci);
      if (d.d_tilde) {
        // every d_tilde = 1 time within the horizon is a Lambda jump
        coef = 1.0 / (fit.kcirc[j] * (1.0 - fit.dlambda[j])) - qsum[j];
      } else {
        coef = j == 0 ? 0.0 : -qsum[j - 1];
      }
    }
    const double mu_c = ci < horizon ? c.mu_hat(ci) : 0.0;
    for (std::size_t k = 0; k < g; ++k) {
      const double s = c.grid[k];
      double v = row[k] - c.mu_at_grid[k];
      const std::size_t upto = fit.nu.count_upto(std::min(s, ci));
      if (upto > 0) v -= rsum[upto - 1];
      if (s > ci) {
        const double tail = c.mu_at_grid[k] - mu_c;
        if (tail != 0.0) v += coef * tail;
      }
      row[k] = v;
    }
  }
  finish_variance(c);
  return c;
}

EstimateCurve estimate(const Sample& sample, DesignKind design, double horizon,
                       std::vector<double> grid) {
  switch (design) {
    case DesignKind::uncensored: {
      const auto paths = sample.paths();
      return mean_uncensored(paths, horizon, std::move(grid));
    }
    case DesignKind::observed:
      return mu_ipcw_observed(sample, horizon, std::move(grid));
    case DesignKind::censored:
      return mu_ipcw_censored(sample, horizon, std::move(grid));
  }
  throw InvalidArgument("unknown design");
}

double point_estimate(const Sample& sample, DesignKind design, double t) {
  switch (design) {
    case DesignKind::uncensored: {
      check_horizon(t);
      double total = 0.0;
      for (const auto& s : sample.subjects()) total += s.path(t);
      return total / static_cast<double>(sample.size());
    }
    case DesignKind::observed:
      return fit_observed(sample, t).mu_hat(t);
    case DesignKind::censored:
      return fit_censored(sample, t).mu_hat(t);
  }
  throw InvalidArgument("unknown design");
}

}  // namespace cpvar
