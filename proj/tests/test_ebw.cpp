#include <cmath>
#include <stdexcept>

#include "bond/ebw.hpp"
#include "bond/rng.hpp"
#include "doctest.h"
#include "support/oracles.hpp"

using namespace bond;

namespace {

TrialLayout orr_fixture() {
  TrialLayout layout;
  layout.kind = OutcomeKind::binary;
  layout.current[0] = ArmSummary::binary_rate(470, 0.128);
  layout.current[1] = ArmSummary::binary_rate(464, 0.284);
  layout.historical.resize(1);
  layout.historical[0][0] = ArmSummary::binary_rate(610, 0.367);
  return layout;
}

}  // namespace

TEST_CASE("weight: formula values and errors") {
  CHECK(weight(0.0, 100, 50) == 0.0);
  CHECK(weight(1.0, 200, 500) == doctest::Approx(5.0 / 7.0).epsilon(1e-12));
  CHECK(weight(0.5, 100, 0) == 0.0);
  CHECK_THROWS_AS(weight(0.5, 0, 10), std::invalid_argument);
  // Effective borrowed size lambda * n_H at the real-world optimum.
  CHECK(0.482 * 610 == doctest::Approx(294.0).epsilon(0.01));
}

TEST_CASE("weight is strictly increasing in lambda") {
  double prev = -1.0;
  for (int i = 0; i <= 500; ++i) {
    const double w = weight(5.0 * i / 500.0, 200, 500);
    CHECK(w > prev);
    prev = w;
  }
  CHECK(prev < 1.0);
}

TEST_CASE("weight_inverse: bijection round trip") {
  CHECK(weight_inverse(0.0, 100, 50) == 0.0);
  CHECK(weight_inverse(0.5, 300, 300) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(weight_inverse(0.385, 470, 610) == doctest::Approx(0.482).epsilon(0.002));
  CHECK_THROWS_AS(weight_inverse(1.0, 100, 100), std::invalid_argument);
  CHECK_THROWS_AS(weight_inverse(-0.1, 100, 100), std::invalid_argument);

  for (int i = 0; i < 1000; ++i) {
    const double lambda = 10.0 * i / 999.0;
    const double w = weight(lambda, 137, 411);
    CHECK(std::abs(weight_inverse(w, 137, 411) - lambda) <= 1e-10);
  }
}

TEST_CASE("estimate_mean") {
  TrialLayout layout = orr_fixture();

  SUBCASE("lambda = 0 returns the current mean") {
    CHECK(estimate_mean(BorrowParams::two_arm(0.0, 0.0), layout, 0) ==
          doctest::Approx(0.128));
  }

  SUBCASE("real-world control mean at lambda = 0.482") {
    CHECK(estimate_mean(BorrowParams::two_arm(0.482, 0.0), layout, 0) ==
          doctest::Approx(0.220).epsilon(0.005));
  }

  SUBCASE("equal means collapse to the common value") {
    layout.historical[0][0] = ArmSummary::binary_rate(610, 0.128);
    for (double l : {0.1, 0.5, 1.0})
      CHECK(estimate_mean(BorrowParams::two_arm(l, 0.0), layout, 0) ==
            doctest::Approx(0.128).epsilon(1e-12));
  }

  SUBCASE("convexity: estimate lies inside the input range") {
    Rng rng(3);
    for (int rep = 0; rep < 200; ++rep) {
      TrialLayout l = testing::random_layout(rng, OutcomeKind::continuous);
      BorrowParams p = BorrowParams::two_arm(rng.next_uniform(), rng.next_uniform());
      for (int arm = 0; arm < 2; ++arm) {
        const double lo = std::min(*l.current[arm].mean, *l.historical[0][arm].mean);
        const double hi = std::max(*l.current[arm].mean, *l.historical[0][arm].mean);
        const double m = estimate_mean(p, l, arm);
        CHECK(m >= lo - 1e-12);
        CHECK(m <= hi + 1e-12);
      }
    }
  }
}

TEST_CASE("estimate_effect") {
  TrialLayout layout = orr_fixture();
  CHECK(estimate_effect(BorrowParams::two_arm(0.0, 0.0), layout) ==
        doctest::Approx(0.156).epsilon(1e-12));
  CHECK(estimate_effect(BorrowParams::two_arm(0.482, 0.0), layout) ==
        doctest::Approx(0.065).epsilon(0.02));

  // Fully commensurate synthetic data at lambda = 1 equals the pooled means.
  TrialLayout both;
  both.kind = OutcomeKind::continuous;
  both.current[0] = ArmSummary::from_moments(100, 1.0, 2.0);
  both.current[1] = ArmSummary::from_moments(120, 1.5, 2.0);
  both.historical.resize(1);
  both.historical[0][0] = ArmSummary::from_moments(50, 0.8, 2.0);
  both.historical[0][1] = ArmSummary::from_moments(60, 1.7, 2.0);
  const double pooled0 = (100 * 1.0 + 50 * 0.8) / 150.0;
  const double pooled1 = (120 * 1.5 + 60 * 1.7) / 180.0;
  CHECK(estimate_effect(BorrowParams::two_arm(1.0, 1.0), both) ==
        doctest::Approx(pooled1 - pooled0).epsilon(1e-12));
}

TEST_CASE("effect_dispersion") {
  TrialLayout layout;
  layout.kind = OutcomeKind::continuous;
  layout.current[0] = ArmSummary::from_moments(100, 0.0, 1.5);
  layout.current[1] = ArmSummary::from_moments(100, 0.3, 1.5);

  SUBCASE("current-only analytic value") {
    Dispersion d = effect_dispersion(BorrowParams::none(), layout);
    CHECK(d.s2 == doctest::Approx(0.03).epsilon(1e-12));
    CHECK(d.s == doctest::Approx(0.17321).epsilon(1e-4));
  }

  SUBCASE("injected true variances override the plug-in values") {
    layout.current[0].variance = 99.0;
    TrueVariances known;
    known.current[0] = 1.5;
    known.current[1] = 1.5;
    CHECK(effect_dispersion(BorrowParams::none(), layout, &known).s2 ==
          doctest::Approx(0.03).epsilon(1e-12));
  }

  SUBCASE("large weight is dominated by the historical term") {
    layout.historical.resize(1);
    layout.historical[0][0] = ArmSummary::from_moments(4000, 0.0, 1.5);
    Dispersion d = effect_dispersion(BorrowParams::two_arm(50.0, 0.0), layout);
    const double w = weight(50.0, 100, 4000);
    const double hist_term = w * w * 1.5 / 4000.0;
    const double cur_term = (1 - w) * (1 - w) * 1.5 / 100.0;
    CHECK(hist_term > cur_term);
    CHECK(d.s2 == doctest::Approx(cur_term + hist_term + 0.015).epsilon(1e-10));
  }

  SUBCASE("zero-weight arm contributes only its current term") {
    layout.historical.resize(1);
    layout.historical[0][1] = ArmSummary::from_moments(200, 0.3, 1.5);
    Dispersion d = effect_dispersion(BorrowParams::two_arm(0.0, 0.0), layout);
    CHECK(d.s2 == doctest::Approx(0.03).epsilon(1e-12));
  }

  SUBCASE("missing variance in a contributing cell names it") {
    layout.historical.resize(1);
    layout.historical[0][0] = ArmSummary::from_moments(1, 0.0);
    CHECK_THROWS_WITH_AS(
        effect_dispersion(BorrowParams::two_arm(0.5, 0.0), layout),
        doctest::Contains("historical source 1"), std::invalid_argument);
  }
}

TEST_CASE("weight profile sums to one per arm") {
  Rng rng(17);
  for (int rep = 0; rep < 200; ++rep) {
    TrialLayout l = testing::random_layout(rng, OutcomeKind::continuous);
    l.historical.push_back(l.historical[0]);  // two sources
    BorrowParams p;
    p.lambda.resize(2);
    for (std::size_t k = 0; k < 2; ++k)
      for (int a = 0; a < 2; ++a) p.lambda[k][a] = rng.next_uniform();
    WeightProfile prof = weight_profile(p, l);
    for (int a = 0; a < 2; ++a) {
      double total = prof.current[a];
      for (const auto& h : prof.historical) total += h[a];
      CHECK(total == doctest::Approx(1.0).epsilon(1e-15));
    }
  }
}
