#include "cpvar/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "cpvar/error.hpp"
#include "cpvar/estimators.hpp"
#include "cpvar/parallel.hpp"

namespace cpvar {

namespace {

constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void check_p(double p) {
  if (!(p >= 1.0 && p < 2.0)) {
    throw InvalidArgument("p must lie in [1, 2)");
  }
}

void check_n_list(const std::vector<std::size_t>& n_list,
                  std::size_t replications) {
  if (n_list.size() < 3) {
    throw StudyError("slope fit needs at least three sample sizes");
  }
  for (std::size_t k = 0; k < n_list.size(); ++k) {
    if (n_list[k] == 0) throw StudyError("sample sizes must be >= 1");
    if (k > 0 && n_list[k] <= n_list[k - 1]) {
      throw StudyError("n_list must be strictly increasing");
    }
  }
  if (replications < 2) throw StudyError("need at least two replications");
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_variance(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

// Runs `stat(n, replication)` over the n_list x B grid and fits the slope.
template <class Stat>
ConvergenceReport run_rate_study(double p, const std::vector<std::size_t>& n_list,
                                 std::size_t replications, unsigned threads,
                                 Stat&& stat) {
  ConvergenceReport r;
  r.p = p;
  r.n_list = n_list;
  r.replications = replications;
  const std::size_t tasks = n_list.size() * replications;
  std::vector<double> values(tasks);
  parallel_for(tasks, threads, [&](std::size_t k) {
    const std::size_t j = k / replications;
    const std::size_t b = k % replications;
    const std::uint64_t rep =
        (static_cast<std::uint64_t>(n_list[j]) << 32) | static_cast<std::uint64_t>(b);
    values[k] = stat(n_list[j], rep);
  });
  std::vector<double> x;
  for (std::size_t j = 0; j < n_list.size(); ++j) {
    std::vector<double> v(values.begin() + j * replications,
                          values.begin() + (j + 1) * replications);
    r.mean_stat.push_back(mean_of(v));
    r.se_stat.push_back(std::sqrt(sample_variance(v) / static_cast<double>(v.size())));
    x.push_back(static_cast<double>(n_list[j]));
  }
  r.fitted_slope = log_log_slope(x, r.mean_stat);
  return r;
}

}  // namespace

Stream::Stream(std::uint64_t seed, std::uint64_t replication,
               std::uint64_t subject) {
  std::uint64_t k = mix64(seed + kGamma);
  k = mix64(k ^ (replication + 2 * kGamma));
  k = mix64(k ^ (subject + 3 * kGamma));
  key_ = k;
}

std::uint64_t Stream::next() {
  ++counter_;
  return mix64(key_ + counter_ * kGamma);
}

double Stream::uniform() {
  return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
}

double Stream::exponential(double rate) {
  if (rate == 0.0) return INFINITY;
  return -std::log(uniform()) / rate;
}

LatentSubject draw_subject(const TruthSpec& truth, Stream& stream) {
  LatentSubject x;
  if (truth.covariate) {
    x.z = stream.bernoulli(truth.covariate->z_prob) ? 1.0 : 0.0;
  }
  x.terminal = stream.exponential(truth.terminal_rate);
  x.censor = stream.exponential(truth.censor_rate);
  const double rate = truth.rate_for(x.z.value_or(0.0));
  const double end = std::min(truth.horizon, x.terminal);
  const std::size_t cap = truth.event_cap
                              ? static_cast<std::size_t>(*truth.event_cap)
                              : std::numeric_limits<std::size_t>::max();
  if (rate > 0.0 && cap > 0) {
    for (double u = stream.exponential(rate); u <= end;
         u += stream.exponential(rate)) {
      x.events.push_back(u);
      if (x.events.size() == cap) break;
    }
  }
  return x;
}

Subject observe(const LatentSubject& x, const TruthSpec& truth,
                DesignKind design, std::int64_t id) {
  const double tau = truth.horizon;
  const CountingPath full(x.events);
  switch (design) {
    case DesignKind::uncensored:
      return {id, full, ObservedCensoring{tau}, x.z};
    case DesignKind::observed: {
      const double c = std::min(x.censor, tau);
      return {id, censor_path(full, c), ObservedCensoring{c}, x.z};
    }
    case DesignKind::censored: {
      // A subject still under observation at tau is censored there.
      const bool terminal = x.terminal < x.censor && x.terminal <= tau;
      const double c = std::min({x.censor, x.terminal, tau});
      return {id, censor_path(full, c), CensoredCensoring{c, !terminal}, x.z};
    }
  }
  throw InvalidArgument("unknown design");
}

Generated generate(const Scenario& scenario, std::uint64_t replication) {
  scenario.truth.validate();
  if (scenario.n == 0) throw InvalidArgument("scenario needs n >= 1");
  std::vector<Subject> subjects;
  std::vector<LatentSubject> latent;
  subjects.reserve(scenario.n);
  latent.reserve(scenario.n);
  for (std::size_t i = 0; i < scenario.n; ++i) {
    Stream stream(scenario.seed, replication, i);
    latent.push_back(draw_subject(scenario.truth, stream));
    subjects.push_back(observe(latent.back(), scenario.truth, scenario.design,
                               static_cast<std::int64_t>(i + 1)));
  }
  return {Sample(std::move(subjects)), std::move(latent)};
}

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw InvalidArgument("slope fit needs at least two matching points");
  }
  std::vector<double> lx;
  std::vector<double> ly;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!(x[k] > 0.0) || !(y[k] > 0.0)) {
      throw StudyError("log-log fit needs positive values");
    }
    lx.push_back(std::log(x[k]));
    ly.push_back(std::log(y[k]));
  }
  const double mx = mean_of(lx);
  const double my = mean_of(ly);
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t k = 0; k < lx.size(); ++k) {
    sxy += (lx[k] - mx) * (ly[k] - my);
    sxx += (lx[k] - mx) * (lx[k] - mx);
  }
  return sxy / sxx;
}

ConvergenceReport convergence_study(const TruthSpec& truth, double p,
                                    const std::vector<std::size_t>& n_list,
                                    std::size_t replications, std::uint64_t seed,
                                    unsigned threads) {
  truth.validate();
  check_p(p);
  check_n_list(n_list, replications);
  const auto mu = [&](double s) { return true_mean(truth, s); };
  auto r = run_rate_study(p, n_list, replications, threads,
                          [&](std::size_t n, std::uint64_t rep) {
                            std::vector<CountingPath> paths;
                            paths.reserve(n);
                            for (std::size_t i = 0; i < n; ++i) {
                              Stream stream(seed, rep, i);
                              paths.emplace_back(draw_subject(truth, stream).events);
                            }
                            return pvar_distance_to_truth(empirical_mean(paths), mu,
                                                          p, truth.horizon)
                                .norm_p;
                          });
  r.theoretical_slope = (1.0 - p) / p;
  return r;
}

ConvergenceReport prop1_study(double tau, double p,
                              const std::vector<std::size_t>& n_list,
                              std::size_t replications, std::uint64_t seed,
                              unsigned threads) {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw InvalidArgument("tau must be finite and > 0");
  }
  check_p(p);
  check_n_list(n_list, replications);
  const auto cdf = [&](double s) { return std::min(s / tau, 1.0); };
  auto r = run_rate_study(p, n_list, replications, threads,
                          [&](std::size_t n, std::uint64_t rep) {
                            std::vector<CountingPath> paths;
                            paths.reserve(n);
                            for (std::size_t i = 0; i < n; ++i) {
                              Stream stream(seed, rep, i);
                              paths.emplace_back(
                                  std::vector<double>{tau * stream.uniform()});
                            }
                            return pvar_distance_to_truth(empirical_mean(paths), cdf,
                                                          p, tau)
                                .v_p;
                          });
  r.theoretical_slope = 1.0 - p;
  return r;
}

AsBoundReport as_bound_study(const TruthSpec& truth, double p,
                             std::size_t n_max, std::uint64_t seed,
                             std::size_t window_start) {
  truth.validate();
  check_p(p);
  if (!truth.event_cap) {
    throw StudyError("as-bound study needs a bounded process (set an event cap)");
  }
  if (window_start < 1 || window_start >= n_max) {
    throw StudyError("need 1 <= window start < n_max");
  }
  AsBoundReport rep;
  rep.p = p;
  rep.n_max = n_max;
  rep.window_start = window_start;
  rep.r.reserve(n_max);

  const double tau = truth.horizon;
  // Truth is evaluated once per event time and cached alongside it.
  struct Point {
    double time;
    double truth;
  };
  std::vector<Point> pooled;  // sorted event times of subjects 1..n
  const double truth_tau = true_mean(truth, tau);
  std::vector<PathPoint> path;
  const double exponent = (p - 1.0) / p;
  for (std::size_t n = 1; n <= n_max; ++n) {
    Stream stream(seed, 0, n - 1);
    for (double t : draw_subject(truth, stream).events) {
      const Point pt{t, true_mean(truth, t)};
      pooled.insert(std::upper_bound(pooled.begin(), pooled.end(), pt,
                                     [](const Point& a, const Point& b) {
                                       return a.time < b.time;
                                     }),
                    pt);
    }
    const double dn = static_cast<double>(n);
    path.clear();
    path.push_back({0.0, Side::right, 0.0});
    std::size_t count = 0;
    for (std::size_t k = 0; k < pooled.size();) {
      std::size_t e = k;
      while (e < pooled.size() && pooled[e].time == pooled[k].time) ++e;
      const double f = pooled[k].truth;
      path.push_back({pooled[k].time, Side::left_limit,
                      static_cast<double>(count) / dn - f});
      count = e;
      path.push_back({pooled[k].time, Side::right,
                      static_cast<double>(count) / dn - f});
      k = e;
    }
    if (pooled.empty() || pooled.back().time < tau) {
      path.push_back({tau, Side::right, static_cast<double>(count) / dn - truth_tau});
    }
    rep.r.push_back(std::pow(dn, exponent) * pvar_path(path, p).norm_p);
  }

  const std::size_t half = window_start + (n_max - window_start) / 2;
  double running = -1.0;
  for (std::size_t n = window_start; n <= n_max; ++n) {
    const double v = rep.r[n - 1];
    if (v > running) {
      running = v;
      rep.argmax = n;
      rep.last_new_max = n;
    }
  }
  rep.max_in_window = running;
  rep.stabilized = rep.last_new_max <= half;
  return rep;
}

namespace {

DesignSummary summarize(DesignKind design, const TruthSpec& truth, double t,
                        std::size_t n, double mu, std::vector<double> est,
                        std::vector<double> var, std::vector<char> covered) {
  DesignSummary s;
  s.design = design;
  std::vector<double> scaled;
  std::vector<double> vars;
  std::size_t hits = 0;
  const double rn = std::sqrt(static_cast<double>(n));
  for (std::size_t b = 0; b < est.size(); ++b) {
    if (std::isnan(est[b])) {
      ++s.failed;
      continue;
    }
    ++s.succeeded;
    scaled.push_back(rn * (est[b] - mu));
    vars.push_back(var[b]);
    hits += covered[b] ? 1 : 0;
  }
  if (s.succeeded < 2) {
    throw StudyError("fewer than two replications succeeded for design " +
                     std::string(design_name(design)));
  }
  s.coverage = static_cast<double>(hits) / static_cast<double>(s.succeeded);
  s.mean_plugin_variance = mean_of(vars);
  s.empirical_variance = sample_variance(scaled);
  s.variance_ratio = s.mean_plugin_variance / s.empirical_variance;
  s.oracle_variance = truth.event_cap
                          ? std::numeric_limits<double>::quiet_NaN()
                          : asymptotic_variance_oracle(truth, t, design);
  s.estimate = std::move(est);
  s.plugin_variance = std::move(var);
  return s;
}

}  // namespace

CoverageReport coverage_and_variance_study(const TruthSpec& truth,
                                           DesignKind design, double t,
                                           std::size_t n,
                                           std::size_t replications,
                                           std::uint64_t seed,
                                           unsigned threads) {
  truth.validate();
  if (!(t > 0.0) || t > truth.horizon) {
    throw StudyError("t must lie in (0, tau]");
  }
  if (n < 2) throw StudyError("coverage study needs n >= 2");
  if (replications < 2) throw StudyError("need at least two replications");

  CoverageReport rep;
  rep.truth = truth;
  rep.t = t;
  rep.n = n;
  rep.replications = replications;
  rep.true_mean = true_mean(truth, t);

  std::vector<DesignKind> designs{design};
  if (truth.terminal_rate > 0.0 && design != DesignKind::uncensored) {
    designs.push_back(design == DesignKind::observed ? DesignKind::censored
                                                     : DesignKind::observed);
  }
  const std::size_t nd = designs.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::vector<double>> est(nd, std::vector<double>(replications, nan));
  std::vector<std::vector<double>> var(nd, std::vector<double>(replications, nan));
  std::vector<std::vector<char>> covered(nd, std::vector<char>(replications, 0));
  const double z975 = 1.959963984540054;
  const double mu = rep.true_mean;

  parallel_for(replications, threads, [&](std::size_t b) {
    std::vector<LatentSubject> latent;
    latent.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      Stream stream(seed, b, i);
      latent.push_back(draw_subject(truth, stream));
    }
    for (std::size_t d = 0; d < nd; ++d) {
      std::vector<Subject> subjects;
      subjects.reserve(n);
      for (std::size_t i = 0; i < n; ++i) {
        subjects.push_back(observe(latent[i], truth, designs[d],
                                   static_cast<std::int64_t>(i + 1)));
      }
      try {
        const auto c = estimate(Sample(std::move(subjects)), designs[d], t, {t});
        est[d][b] = c.mu_at_grid[0];
        var[d][b] = c.variance[0];
        const double se = c.se(0);
        covered[d][b] = std::fabs(c.mu_at_grid[0] - mu) <= z975 * se;
      } catch (const RiskSetError&) {
        // counted as a failure in the summary
      }
    }
  });

  rep.primary = summarize(designs[0], truth, t, n, mu, est[0], var[0], covered[0]);
  if (nd == 2) {
    rep.companion = summarize(designs[1], truth, t, n, mu, est[1], var[1], covered[1]);
    const std::size_t io = designs[0] == DesignKind::observed ? 0 : 1;
    const std::size_t ic = 1 - io;
    if (!truth.event_cap) {
      rep.oracle_gap = asymptotic_variance_oracle(truth, t, DesignKind::observed) -
                       asymptotic_variance_oracle(truth, t, DesignKind::censored);
    }
    std::vector<double> pg;
    std::vector<double> xo;
    std::vector<double> xc;
    const double rn = std::sqrt(static_cast<double>(n));
    for (std::size_t b = 0; b < replications; ++b) {
      if (std::isnan(est[io][b]) || std::isnan(est[ic][b])) continue;
      pg.push_back(var[io][b] - var[ic][b]);
      xo.push_back(rn * (est[io][b] - mu));
      xc.push_back(rn * (est[ic][b] - mu));
    }
    if (pg.size() >= 2) {
      rep.plugin_gap_mean = mean_of(pg);
      rep.plugin_gap_se = std::sqrt(sample_variance(pg) / static_cast<double>(pg.size()));
      rep.empirical_gap = sample_variance(xo) - sample_variance(xc);
      // paired delta-method standard error of the variance difference
      const double mo = mean_of(xo);
      const double mc = mean_of(xc);
      std::vector<double> psi;
      for (std::size_t k = 0; k < xo.size(); ++k) {
        psi.push_back((xo[k] - mo) * (xo[k] - mo) - (xc[k] - mc) * (xc[k] - mc));
      }
      rep.empirical_gap_se =
          std::sqrt(sample_variance(psi) / static_cast<double>(psi.size()));
    }
  }
  return rep;
}

}  // namespace cpvar
