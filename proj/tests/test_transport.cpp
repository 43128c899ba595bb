#include <stdexcept>
#include <algorithm>
#include <cmath>
#include <vector>

#include "bond/rng.hpp"
#include "bond/transport.hpp"
#include "doctest.h"
#include "support/oracles.hpp"

using namespace bond;

namespace {

std::vector<double> random_sample(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = 4.0 * rng.next_uniform() - 2.0;
  return v;
}

}  // namespace

TEST_CASE("w1_empirical: identity, point masses, unequal supports") {
  std::vector<double> x{0.3, -1.2, 5.0};
  CHECK(w1_empirical(x, x) == doctest::Approx(0.0));
  CHECK(w1_empirical(std::vector<double>{0.0}, std::vector<double>{1.0}) ==
        doctest::Approx(1.0));
  CHECK(w1_empirical(std::vector<double>{0.0, 1.0}, std::vector<double>{1.0, 2.0}) ==
        doctest::Approx(1.0));
  CHECK_THROWS_AS(w1_empirical(std::vector<double>{}, x), std::invalid_argument);
}

TEST_CASE("w1_empirical: equal sizes reduce to mean absolute sorted difference") {
  Rng rng(7);
  for (int rep = 0; rep < 40; ++rep) {
    auto x = random_sample(rng, 1 + rng.next_u64() % 30);
    auto y = random_sample(rng, x.size());
    auto xs = x, ys = y;
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    double expect = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) expect += std::abs(xs[i] - ys[i]);
    expect /= xs.size();
    CHECK(w1_empirical(x, y) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("w1_empirical: metric axioms and LP oracle on small instances") {
  Rng rng(11);
  for (int rep = 0; rep < 120; ++rep) {
    auto x = random_sample(rng, 1 + rng.next_u64() % 6);
    auto y = random_sample(rng, 1 + rng.next_u64() % 6);
    auto z = random_sample(rng, 1 + rng.next_u64() % 6);
    const double dxy = w1_empirical(x, y);
    CHECK(dxy == doctest::Approx(w1_empirical(y, x)).epsilon(1e-12));
    CHECK(dxy == doctest::Approx(testing::w1_lp_oracle(x, y)).epsilon(1e-9));
    CHECK(dxy <= w1_empirical(x, z) + w1_empirical(z, y) + 1e-9);
  }
}

TEST_CASE("estimate_radii") {
  std::map<int, std::vector<double>> cur{{0, {0.0, 0.0}}};
  std::vector<std::map<int, std::vector<double>>> hist(1);

  SUBCASE("identical samples give zero radius") {
    hist[0][0] = {0.0, 0.0};
    RadiusSpec r = estimate_radii(cur, hist, 1.5);
    CHECK(r.at(0, 0) == doctest::Approx(0.0));
    CHECK(r.origin == RadiusSpec::Origin::data_driven);
  }

  SUBCASE("unit separation scales by c") {
    hist[0][0] = {1.0, 1.0};
    CHECK(estimate_radii(cur, hist, 1.5).at(0, 0) == doctest::Approx(1.5));
  }

  SUBCASE("missing current samples is an error") {
    hist[0][1] = {1.0};
    CHECK_THROWS_AS(estimate_radii(cur, hist, 1.5), std::invalid_argument);
  }

  SUBCASE("location shift is recovered within sampling error") {
    Rng rng(99);
    std::vector<double> a(20000), b(20000);
    for (auto& v : a) v = rng.next_normal();
    for (auto& v : b) v = 1.0 + rng.next_normal();
    std::map<int, std::vector<double>> c2{{0, a}};
    std::vector<std::map<int, std::vector<double>>> h2{{{0, b}}};
    CHECK(estimate_radii(c2, h2, 1.5).at(0, 0) == doctest::Approx(1.5).epsilon(0.03));
  }
}

TEST_CASE("shift_bounds closed forms") {
  ShiftBounds c = shift_bounds(OutcomeKind::continuous, 0.0, 0.3);
  CHECK(c.plus == doctest::Approx(0.3));
  CHECK(c.minus == doctest::Approx(-0.3));

  ShiftBounds clamped = shift_bounds(OutcomeKind::binary, 0.9, 0.2);
  CHECK(clamped.plus == doctest::Approx(0.1));
  CHECK(clamped.minus == doctest::Approx(-0.2));

  ShiftBounds interior = shift_bounds(OutcomeKind::binary, 0.128, 0.05);
  CHECK(interior.plus == doctest::Approx(0.05));
  CHECK(interior.minus == doctest::Approx(-0.05));

  CHECK_THROWS_AS(shift_bounds(OutcomeKind::binary, 1.2, 0.1), std::invalid_argument);
}

TEST_CASE("drift_range values and monotonicity") {
  CHECK(drift_range(OutcomeKind::continuous, 0.0, 0.3) == doctest::Approx(0.6));
  CHECK(drift_range(OutcomeKind::binary, 0.9, 0.2) == doctest::Approx(0.3));
  CHECK(drift_range(OutcomeKind::continuous, 0.0, 0.0) == doctest::Approx(0.0));

  Rng rng(5);
  for (int rep = 0; rep < 50; ++rep) {
    const double mu = rng.next_uniform();
    double prev = 0.0;
    for (double rho = 0.0; rho <= 1.2; rho += 0.05) {
      const double d = drift_range(OutcomeKind::binary, mu, rho);
      CHECK(d >= prev - 1e-15);
      prev = d;
    }
  }

  // Continuous drift range grows with exact slope 2 in rho.
  for (int rep = 0; rep < 50; ++rep) {
    const double r1 = rng.next_uniform(), r2 = rng.next_uniform();
    CHECK(drift_range(OutcomeKind::continuous, 0.0, r1) -
              drift_range(OutcomeKind::continuous, 0.0, r2) ==
          doctest::Approx(2.0 * (r1 - r2)).epsilon(1e-12));
  }
}

// Feasibility of the closed-form bounds: constructive perturbations within
// the transport budget never exceed them, and the extreme constructions
// attain them.
TEST_CASE("shift bounds are feasible and attained") {
  Rng rng(13);
  for (int rep = 0; rep < 2000; ++rep) {
    const double rho = rng.next_uniform();

    // Continuous: translation by |t| <= rho costs exactly |t|.
    const double t = (2.0 * rng.next_uniform() - 1.0) * rho;
    ShiftBounds c = shift_bounds(OutcomeKind::continuous, 0.0, rho);
    CHECK(t <= c.plus + 1e-12);
    CHECK(t >= c.minus - 1e-12);
    CHECK(c.plus == doctest::Approx(rho).epsilon(1e-12));

    // Binary: probability-flip kernel with budget b <= rho moves the mean by
    // exactly the flipped mass.
    const double mu = rng.next_uniform();
    const double budget = rho * rng.next_uniform();
    ShiftBounds b = shift_bounds(OutcomeKind::binary, mu, rho);
    const double up_shift = std::min(budget, 1.0 - mu);
    const double down_shift = std::min(budget, mu);
    CHECK(up_shift <= b.plus + 1e-12);
    CHECK(-down_shift >= b.minus - 1e-12);
    // The full-budget kernels attain the bounds.
    CHECK(std::min(rho, 1.0 - mu) == doctest::Approx(b.plus).epsilon(1e-12));
    CHECK(-std::min(rho, mu) == doctest::Approx(b.minus).epsilon(1e-12));
  }
}
