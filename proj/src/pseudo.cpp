#include "cpvar/pseudo.hpp"

#include <cmath>
#include <string>

#include "cpvar/error.hpp"
#include "cpvar/estimators.hpp"
#include "cpvar/parallel.hpp"

namespace cpvar {

PseudoSet pseudo_values(const Sample& sample, double t, DesignKind kind,
                        unsigned threads) {
  PseudoSet out;
  out.t = t;
  out.kind = kind;
  out.full_estimate = point_estimate(sample, kind, t);
  const std::size_t n = sample.size();
  for (const auto& s : sample.subjects()) {
    out.ids.push_back(s.id);
    out.z.push_back(s.z);
  }
  if (n < 2) throw InvalidArgument("pseudo-values need at least two subjects");
  const double dn = static_cast<double>(n);
  out.values.assign(n, 0.0);
  parallel_for(n, threads, [&](std::size_t i) {
    double loo = 0.0;
    try {
      loo = point_estimate(sample.without(i), kind, t);
    } catch (const RiskSetError& e) {
      throw RiskSetError("leaving out subject " + std::to_string(sample[i].id) +
                         ": " + e.what());
    }
    out.values[i] = dn * out.full_estimate - (dn - 1.0) * loo;
  });
  return out;
}

UnbiasednessReport conditional_unbiasedness_check(const Sample& sample,
                                                  double t, DesignKind kind,
                                                  const TruthSpec& truth,
                                                  unsigned threads) {
  for (const auto& s : sample.subjects()) {
    if (!s.z) {
      throw InvalidArgument("subject " + std::to_string(s.id) +
                            " has no covariate");
    }
    if (*s.z != 0.0 && *s.z != 1.0) {
      throw InvalidArgument("covariate of subject " + std::to_string(s.id) +
                            " is not binary");
    }
  }
  UnbiasednessReport r;
  r.pseudo = pseudo_values(sample, t, kind, threads);
  double total = 0.0;
  for (double v : r.pseudo.values) total += v;
  r.mean_pseudo = total / static_cast<double>(r.pseudo.values.size());

  for (double z : {0.0, 1.0}) {
    GroupCheck g;
    g.z = z;
    double s1 = 0.0;
    double s2 = 0.0;
    for (std::size_t i = 0; i < r.pseudo.values.size(); ++i) {
      if (*r.pseudo.z[i] != z) continue;
      ++g.count;
      s1 += r.pseudo.values[i];
    }
    if (g.count < 2) {
      throw StudyError("covariate group z = " + std::to_string(int(z)) +
                       " has fewer than two subjects");
    }
    const double m = static_cast<double>(g.count);
    g.mean = s1 / m;
    for (std::size_t i = 0; i < r.pseudo.values.size(); ++i) {
      if (*r.pseudo.z[i] != z) continue;
      const double d = r.pseudo.values[i] - g.mean;
      s2 += d * d;
    }
    g.se = std::sqrt(s2 / (m - 1.0) / m);
    g.truth = true_mean_given_z(truth, z, t);
    g.studentized = g.se > 0.0 ? (g.mean - g.truth) / g.se
                               : (g.mean == g.truth ? 0.0 : INFINITY);
    r.groups.push_back(g);
  }
  return r;
}

}  // namespace cpvar
