#include <doctest.h>

#include <set>

#include "cpvar/estimators.hpp"
#include "cpvar/sim.hpp"

using namespace cpvar;

TEST_CASE("stream") {
  Stream a(1, 2, 3);
  Stream b(1, 2, 3);
  Stream c(1, 2, 4);
  Stream d(1, 3, 3);
  std::set<std::uint64_t> seen;
  for (int k = 0; k < 1000; ++k) {
    const auto x = a.next();
    REQUIRE(x == b.next());
    seen.insert(x);
    seen.insert(c.next());
    seen.insert(d.next());
  }
  CHECK(seen.size() == 3000);
  double sum = 0.0;
  Stream e(7, 0, 0);
  for (int k = 0; k < 100000; ++k) {
    const double u = e.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(sum / 100000 == doctest::Approx(0.5).epsilon(0.01));
  CHECK(e.exponential(0.0) == INFINITY);
}

TEST_CASE("generate") {
  TruthSpec truth;
  truth.event_rate = 1.0;
  truth.censor_rate = 0.5;
  truth.terminal_rate = 0.3;
  truth.horizon = 5.0;

  SUBCASE("deterministic per seed") {
    const auto x = generate({truth, 50, 42, DesignKind::censored});
    const auto y = generate({truth, 50, 42, DesignKind::censored});
    CHECK(x.sample == y.sample);
    const auto z = generate({truth, 50, 43, DesignKind::censored});
    CHECK_FALSE(x.sample == z.sample);
  }
  SUBCASE("designs share the latent draws") {
    const auto o = generate({truth, 200, 5, DesignKind::observed});
    const auto c = generate({truth, 200, 5, DesignKind::censored});
    const auto u = generate({truth, 200, 5, DesignKind::uncensored});
    for (std::size_t i = 0; i < 200; ++i) {
      const auto& x = o.latent[i];
      REQUIRE(x.events == c.latent[i].events);
      for (double e : x.events) REQUIRE(e <= std::min(truth.horizon, x.terminal));
      const double co = std::get<ObservedCensoring>(o.sample[i].design).c;
      REQUIRE(co == std::min(x.censor, truth.horizon));
      const auto cc = std::get<CensoredCensoring>(c.sample[i].design);
      REQUIRE(cc.c_tilde == std::min({x.censor, x.terminal, truth.horizon}));
      REQUIRE(cc.d_tilde == !(x.terminal < x.censor && x.terminal <= truth.horizon));
      REQUIRE(u.sample[i].path.event_times().size() == x.events.size());
      REQUIRE(std::get<ObservedCensoring>(u.sample[i].design).c == truth.horizon);
    }
  }
  SUBCASE("no censoring observes everything to tau ^ T") {
    TruthSpec none = truth;
    none.censor_rate = 0.0;
    const auto g = generate({none, 100, 6, DesignKind::observed});
    for (std::size_t i = 0; i < 100; ++i) {
      REQUIRE(g.sample[i].path.event_times().size() == g.latent[i].events.size());
    }
  }
  SUBCASE("event cap") {
    TruthSpec capped = truth;
    capped.event_rate = 5.0;
    capped.event_cap = 3;
    const auto g = generate({capped, 100, 7, DesignKind::uncensored});
    for (const auto& x : g.latent) REQUIRE(x.events.size() <= 3);
  }
  SUBCASE("covariate multiplies the rate") {
    TruthSpec z = truth;
    z.terminal_rate = 0.0;
    z.covariate = CovariateMix{0.5, 2.0};
    const auto g = generate({z, 20000, 8, DesignKind::uncensored});
    double n0 = 0, n1 = 0, e0 = 0, e1 = 0;
    for (const auto& x : g.latent) {
      REQUIRE(x.z.has_value());
      if (*x.z == 1.0) {
        ++n1;
        e1 += x.events.size();
      } else {
        ++n0;
        e0 += x.events.size();
      }
    }
    CHECK(n1 / (n0 + n1) == doctest::Approx(0.5).epsilon(0.03));
    CHECK(e0 / n0 == doctest::Approx(5.0).epsilon(0.03));
    CHECK(e1 / n1 == doctest::Approx(10.0).epsilon(0.03));
  }
}

TEST_CASE("log-log slope") {
  const std::vector<double> x{1, 2, 4, 8};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 * std::pow(v, -0.5));
  CHECK(log_log_slope(x, y) == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK_THROWS_AS(log_log_slope({1, 2}, {1, 0}), StudyError);
}

TEST_CASE("rate studies are deterministic and thread independent") {
  TruthSpec truth;
  truth.horizon = 5.0;
  const std::vector<std::size_t> ns{10, 20, 40};
  const auto a = convergence_study(truth, 1.5, ns, 20, 9, 1);
  const auto b = convergence_study(truth, 1.5, ns, 20, 9, 3);
  CHECK(a.mean_stat == b.mean_stat);
  CHECK(a.theoretical_slope == doctest::Approx(-1.0 / 3));
  CHECK(convergence_study(truth, 1.0, ns, 5, 9).theoretical_slope == 0.0);
  const auto c = prop1_study(5.0, 1.5, ns, 20, 9, 1);
  const auto d = prop1_study(5.0, 1.5, ns, 20, 9, 2);
  CHECK(c.mean_stat == d.mean_stat);
  CHECK(c.theoretical_slope == -0.5);
  CHECK_THROWS_AS(convergence_study(truth, 2.0, ns, 5, 9), InvalidArgument);
  CHECK_THROWS_AS(convergence_study(truth, 1.5, {10, 20}, 5, 9), StudyError);
}

TEST_CASE("as-bound study") {
  TruthSpec truth;
  truth.horizon = 5.0;
  CHECK_THROWS_AS(as_bound_study(truth, 1.5, 200, 1), StudyError);
  truth.event_cap = 3;
  SUBCASE("matches the generic distance on a prefix") {
    const auto r = as_bound_study(truth, 1.5, 150, 4, 10);
    for (std::size_t n : {1, 7, 60, 150}) {
      std::vector<CountingPath> paths;
      for (std::size_t i = 0; i < n; ++i) {
        Stream s(4, 0, i);
        paths.emplace_back(draw_subject(truth, s).events);
      }
      const double direct =
          std::pow(double(n), 1.0 / 3) *
          pvar_distance_to_truth(empirical_mean(paths),
                                 [&](double t) { return true_mean(truth, t); },
                                 1.5, 5.0)
              .norm_p;
      REQUIRE(r.r[n - 1] == doctest::Approx(direct).epsilon(1e-12));
    }
  }
  SUBCASE("zero process") {
    TruthSpec zero = truth;
    zero.event_rate = 0.0;
    const auto r = as_bound_study(zero, 1.5, 150, 4, 10);
    for (double v : r.r) REQUIRE(v == 0.0);
  }
  SUBCASE("p = 1 is bounded by the total variation") {
    const auto r = as_bound_study(truth, 1.0, 300, 5, 10);
    for (double v : r.r) REQUIRE(v <= 4.0 * 3 + 1e-12);
  }
}

TEST_CASE("coverage study plumbing") {
  TruthSpec truth;
  truth.censor_rate = 0.5;
  truth.terminal_rate = 0.3;
  truth.horizon = 5.0;
  const auto a = coverage_and_variance_study(truth, DesignKind::censored, 2.0,
                                             50, 40, 3, 1);
  const auto b = coverage_and_variance_study(truth, DesignKind::censored, 2.0,
                                             50, 40, 3, 2);
  CHECK(a.primary.estimate == b.primary.estimate);
  REQUIRE(a.companion.has_value());
  CHECK(a.companion->design == DesignKind::observed);
  CHECK(a.primary.succeeded + a.primary.failed == 40);
  CHECK(a.oracle_gap > 0.0);
  CHECK(a.true_mean == doctest::Approx(true_mean(truth, 2.0)));

  TruthSpec plain;
  plain.horizon = 5.0;
  const auto u = coverage_and_variance_study(plain, DesignKind::uncensored, 2.0,
                                             30, 20, 3);
  CHECK_FALSE(u.companion.has_value());
  CHECK(u.primary.oracle_variance == doctest::Approx(2.0));
  CHECK_THROWS_AS(coverage_and_variance_study(plain, DesignKind::observed, 6.0,
                                              30, 20, 3),
                  StudyError);
}
