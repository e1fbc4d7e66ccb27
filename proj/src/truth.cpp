#include "cpvar/truth.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <string>

#include "cpvar/csv.hpp"
#include "cpvar/error.hpp"

namespace cpvar {

namespace {

constexpr double kQuadTol = 1e-10;

template <class F>
double integrate(F&& f, double a, double b) {
  if (!(b > a)) return 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      f, a, b, 15, kQuadTol);
}

// E(h ^ T) for T ~ Exp(rho).
double m1(double rho, double h) {
  if (rho == 0.0) return h;
  return -std::expm1(-rho * h) / rho;
}

// E((h ^ T)^2).
double m2(double rho, double h) {
  const double x = rho * h;
  if (x < 1e-4) return h * h * (1.0 - 2.0 * x / 3.0 + x * x / 4.0);
  return 2.0 / (rho * rho) * (-std::expm1(-x) - x * std::exp(-x));
}

// int_0^x e^{k u} du
double ie(double k, double x) {
  if (k == 0.0) return x;
  return std::expm1(k * x) / k;
}

// int_0^x u e^{k u} du
double iue(double k, double x) {
  const double kx = k * x;
  if (std::fabs(kx) < 1e-4) {
    return x * x * (0.5 + kx / 3.0 + kx * kx / 8.0);
  }
  return (x * std::exp(kx) - std::expm1(kx) / k) / k;
}

// E min(Poisson(m), cap)
double capped_poisson_mean(double m, int cap) {
  double term = std::exp(-m);  // P(X = j)
  double below = 0.0;          // P(X < k)
  double sum = 0.0;
  for (int k = 1; k <= cap; ++k) {
    below += term;
    term *= m / k;
    sum += 1.0 - below;
  }
  return std::max(sum, 0.0);
}

double mean_for_rate(const TruthSpec& t, double rate, double s) {
  if (!t.event_cap) return rate * m1(t.terminal_rate, s);
  const int cap = *t.event_cap;
  auto g = [&](double d) { return capped_poisson_mean(rate * d, cap); };
  const double rho = t.terminal_rate;
  if (rho == 0.0) return g(s);
  return std::exp(-rho * s) * g(s) +
         integrate([&](double u) { return rho * std::exp(-rho * u) * g(u); },
                   0.0, s);
}

void check_time(const TruthSpec& t, double s) {
  if (!(s >= 0.0) || s > t.horizon) {
    throw InvalidArgument("time " + csv::format(s) + " outside [0, " +
                          csv::format(t.horizon) + "]");
  }
}

void require_uncapped(const TruthSpec& t) {
  if (t.event_cap) {
    throw InvalidArgument(
        "unsupported truth family: closed forms need an uncapped process");
  }
}

}  // namespace

void TruthSpec::validate() const {
  auto rate_ok = [](double r) { return r >= 0.0 && std::isfinite(r); };
  if (!rate_ok(event_rate)) throw InvalidArgument("event rate must be >= 0");
  if (!rate_ok(censor_rate)) throw InvalidArgument("censor rate must be >= 0");
  if (!rate_ok(terminal_rate)) {
    throw InvalidArgument("terminal rate must be >= 0");
  }
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw InvalidArgument("horizon must be finite and > 0");
  }
  if (covariate) {
    if (!(covariate->z_prob >= 0.0 && covariate->z_prob <= 1.0)) {
      throw InvalidArgument("z_prob must lie in [0, 1]");
    }
    if (!rate_ok(covariate->multiplier)) {
      throw InvalidArgument("z multiplier must be >= 0");
    }
  }
  if (event_cap && *event_cap < 0) {
    throw InvalidArgument("event cap must be >= 0");
  }
}

double TruthSpec::rate_for(double z) const {
  if (covariate && z == 1.0) return event_rate * covariate->multiplier;
  return event_rate;
}

double TruthSpec::mean_rate() const {
  if (!covariate) return event_rate;
  const double pi = covariate->z_prob;
  return (1.0 - pi) * event_rate + pi * event_rate * covariate->multiplier;
}

double TruthSpec::second_moment_rate() const {
  if (!covariate) return event_rate * event_rate;
  const double pi = covariate->z_prob;
  const double hi = event_rate * covariate->multiplier;
  return (1.0 - pi) * event_rate * event_rate + pi * hi * hi;
}

double true_mean(const TruthSpec& truth, double s) {
  check_time(truth, s);
  if (!truth.covariate) return mean_for_rate(truth, truth.event_rate, s);
  const double pi = truth.covariate->z_prob;
  return (1.0 - pi) * mean_for_rate(truth, truth.rate_for(0.0), s) +
         pi * mean_for_rate(truth, truth.rate_for(1.0), s);
}

double true_mean_given_z(const TruthSpec& truth, double z, double s) {
  check_time(truth, s);
  return mean_for_rate(truth, truth.rate_for(z), s);
}

double true_variance(const TruthSpec& truth, double s) {
  return true_increment_variance(truth, 0.0, s);
}

// N(s) - N(u) | Z, T ~ Poisson(lambda_Z D) with D = (s ^ T - u)^+, so
// Var = E lambda E D + E lambda^2 E D^2 - (E lambda E D)^2.
double true_increment_variance(const TruthSpec& truth, double u, double s) {
  require_uncapped(truth);
  check_time(truth, s);
  if (!(u >= 0.0) || u > s) throw InvalidArgument("need 0 <= u <= s");
  const double rho = truth.terminal_rate;
  const double surv = std::exp(-rho * u);
  const double ed = surv * m1(rho, s - u);
  const double ed2 = surv * m2(rho, s - u);
  const double el = truth.mean_rate();
  return el * ed + truth.second_moment_rate() * ed2 - el * el * ed * ed;
}

double influence_at_truth(const LatentSubject& x, const TruthSpec& truth,
                          double s, DesignKind design) {
  require_uncapped(truth);
  check_time(truth, s);
  const double r = truth.censor_rate;
  const double rho = truth.terminal_rate;
  const double el = truth.mean_rate();
  auto events_upto = [&](double t) {
    return static_cast<double>(
        std::upper_bound(x.events.begin(), x.events.end(), t) -
        x.events.begin());
  };
  const double mu_s = true_mean(truth, s);

  if (design == DesignKind::uncensored || r == 0.0) {
    return events_upto(s) - mu_s;
  }
  const double c = x.censor;
  const double cs = std::min(c, s);
  // sum over events e <= C ^ s of 1 / K(e)
  double weighted = 0.0;
  for (double e : x.events) {
    if (e > cs) break;
    weighted += std::exp(r * e);
  }
  if (design == DesignKind::observed) {
    // int_0^{C ^ s} (dN - dmu) / K
    return weighted - el * ie(r - rho, cs);
  }

  // Censored design: the censoring survivor is estimated from (C ^ T, 1{C < T}).
  auto mu_gap = [&](double v) {  // mu(s) - mu(v)
    if (rho == 0.0) return el * (s - v);
    return el * (std::exp(-rho * v) - std::exp(-rho * s)) / rho;
  };
  double out = weighted - mu_s;
  if (c < x.terminal && c < s) {
    out += mu_gap(c) * std::exp((r + rho) * c);
  }
  const double upto = std::min(cs, x.terminal);
  if (rho == 0.0) {
    out -= el * r * (s * ie(r, upto) - iue(r, upto));
  } else {
    out -= el * r / rho *
           (ie(r, upto) - std::exp(-rho * s) * ie(r + rho, upto));
  }
  return out;
}

double asymptotic_variance_oracle(const TruthSpec& truth, double s,
                                  DesignKind design) {
  require_uncapped(truth);
  check_time(truth, s);
  const double r = truth.censor_rate;
  double v = true_variance(truth, s);
  if (design == DesignKind::uncensored || r == 0.0) return v;
  v += integrate(
      [&](double u) {
        return true_increment_variance(truth, u, s) * r * std::exp(r * u);
      },
      0.0, s);
  if (design == DesignKind::censored) {
    v -= censored_design_variance_gain(truth, s);
  }
  return v;
}

double censored_design_variance_gain(const TruthSpec& truth, double s) {
  require_uncapped(truth);
  check_time(truth, s);
  const double r = truth.censor_rate;
  const double rho = truth.terminal_rate;
  if (r == 0.0 || rho == 0.0) return 0.0;
  const double mu_s = true_mean(truth, s);
  return integrate(
      [&](double u) {
        const double gap = mu_s - true_mean(truth, u);
        return gap * gap * std::expm1(rho * u) * r * std::exp(r * u);
      },
      0.0, s);
}

}  // namespace cpvar
