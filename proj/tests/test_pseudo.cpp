#include <doctest.h>

#include <random>

#include "cpvar/estimators.hpp"
#include "cpvar/pseudo.hpp"
#include "cpvar/sim.hpp"
#include "support.hpp"

using namespace cpvar;
using cpvar::testing::dataset_a;

namespace {

// |a - b| within a few ulps of the n * mu-hat(t) scale of the subtraction.
bool machine_close(double a, double b, double scale) {
  return std::fabs(a - b) <= 8 * std::numeric_limits<double>::epsilon() *
                                 std::max(1.0, scale);
}

}  // namespace

TEST_CASE("dataset A pseudo-values") {
  const auto ps = pseudo_values(dataset_a(), 2.0, DesignKind::observed);
  // mu-hat(2) = 1; without subject 1: 1; without subject 2: 1
  CHECK(ps.full_estimate == 1.0);
  CHECK(ps.values == std::vector<double>{1.0, 1.0});
  CHECK(ps.ids == std::vector<std::int64_t>{1, 2});
  // t = 3: leaving out subject 1 leaves C = 2 < 3
  CHECK_THROWS_WITH_AS(pseudo_values(dataset_a(), 3.0, DesignKind::observed),
                       doctest::Contains("subject 1"), RiskSetError);
}

TEST_CASE("uncensored pseudo-values are the outcomes") {
  TruthSpec truth;
  truth.event_rate = 1.5;
  truth.censor_rate = 0.5;
  truth.horizon = 4.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto g = generate({truth, 60, seed, DesignKind::uncensored});
    for (double t : {0.5, 2.0, 4.0}) {
      const auto ps = pseudo_values(g.sample, t, DesignKind::uncensored, 2);
      const double scale = 60 * ps.full_estimate;
      double sum = 0.0;
      for (std::size_t i = 0; i < ps.values.size(); ++i) {
        REQUIRE(machine_close(ps.values[i], g.sample[i].path(t), scale));
        sum += ps.values[i];
      }
      CHECK(sum / 60 == doctest::Approx(ps.full_estimate).epsilon(1e-13));
      // full follow-up: the observed-censoring estimator gives the same
      const auto po = pseudo_values(g.sample, t, DesignKind::observed);
      for (std::size_t i = 0; i < ps.values.size(); ++i) {
        REQUIRE(machine_close(po.values[i], ps.values[i], scale));
      }
    }
  }
}

TEST_CASE("censored pseudo-values reduce without early follow-up ends") {
  std::vector<Subject> subj;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.1, 2.9);
  for (int i = 0; i < 30; ++i) {
    subj.push_back({i + 1, CountingPath({u(rng), u(rng)}),
                    CensoredCensoring{3.0 + (i % 3), i % 2 == 0}, std::nullopt});
  }
  const Sample s(std::move(subj));
  const auto pc = pseudo_values(s, 2.5, DesignKind::censored);
  const auto pu = pseudo_values(s, 2.5, DesignKind::uncensored);
  CHECK(pc.values == pu.values);
}

TEST_CASE("thread count does not change pseudo-values") {
  TruthSpec truth;
  truth.censor_rate = 0.5;
  truth.terminal_rate = 0.3;
  truth.horizon = 5.0;
  const auto g = generate({truth, 80, 3, DesignKind::censored});
  const auto a = pseudo_values(g.sample, 2.0, DesignKind::censored, 1);
  const auto b = pseudo_values(g.sample, 2.0, DesignKind::censored, 3);
  CHECK(a.values == b.values);
}

TEST_CASE("conditional unbiasedness check") {
  TruthSpec truth;
  truth.event_rate = 1.0;
  truth.horizon = 5.0;
  truth.covariate = CovariateMix{0.5, 2.0};
  SUBCASE("no censoring: group means are the outcome means") {
    const auto g = generate({truth, 200, 8, DesignKind::uncensored});
    const auto r = conditional_unbiasedness_check(g.sample, 2.0,
                                                  DesignKind::uncensored, truth);
    REQUIRE(r.groups.size() == 2);
    for (const auto& grp : r.groups) {
      double sum = 0.0;
      std::size_t count = 0;
      for (const auto& s : g.sample.subjects()) {
        if (*s.z == grp.z) {
          sum += s.path(2.0);
          ++count;
        }
      }
      CHECK(grp.count == count);
      CHECK(grp.mean == doctest::Approx(sum / count).epsilon(1e-12));
    }
    CHECK(r.groups[0].truth == 2.0);
    CHECK(r.groups[1].truth == 4.0);
  }
  SUBCASE("equal rates give equal group truths") {
    TruthSpec same = truth;
    same.covariate->multiplier = 1.0;
    const auto g = generate({same, 50, 9, DesignKind::uncensored});
    const auto r = conditional_unbiasedness_check(g.sample, 1.0,
                                                  DesignKind::uncensored, same);
    CHECK(r.groups[0].truth == r.groups[1].truth);
  }
  SUBCASE("missing covariate") {
    CHECK_THROWS_AS(conditional_unbiasedness_check(dataset_a(), 1.0,
                                                   DesignKind::observed, truth),
                    InvalidArgument);
  }
}
