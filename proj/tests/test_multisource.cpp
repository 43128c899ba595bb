#include <cmath>
#include <stdexcept>

#include "bond/multisource.hpp"
#include "bond/rng.hpp"
#include "doctest.h"
#include "support/oracles.hpp"

using namespace bond;
namespace ms = bond::multisource;

namespace {

ms::MultiLayout three_arm_toy() {
  ms::MultiLayout layout;
  layout.kind = OutcomeKind::continuous;
  layout.current[0] = ArmSummary::from_moments(50, 1.0, 1.0);
  layout.current[1] = ArmSummary::from_moments(60, 2.0, 1.0);
  layout.current[2] = ArmSummary::from_moments(70, 3.5, 1.0);
  layout.historical.resize(1);
  layout.historical[0][0] = ArmSummary::from_moments(100, 1.2, 1.0);
  layout.historical[0][2] = ArmSummary::from_moments(80, 3.0, 1.0);
  return layout;
}

}  // namespace

TEST_CASE("contrast_effect") {
  SUBCASE("two-arm contrast reduces to estimate_effect") {
    Rng rng(81);
    for (int rep = 0; rep < 1000; ++rep) {
      TrialLayout two = testing::random_layout(rng, OutcomeKind::continuous);
      BorrowParams params =
          BorrowParams::two_arm(rng.next_uniform(), rng.next_uniform());
      const double direct = estimate_effect(params, two);
      const double via_contrast = ms::contrast_effect(
          params, ms::from_two_arm(two), ms::Contrast::two_arm());
      CHECK(via_contrast == doctest::Approx(direct).epsilon(1e-12));
    }
  }

  SUBCASE("zero borrowing gives the plain current contrast") {
    ms::MultiLayout layout = three_arm_toy();
    ms::Contrast c{{{0, -2.0}, {1, 1.0}, {2, 1.0}}};
    CHECK(ms::contrast_effect(BorrowParams::none(), layout, c) ==
          doctest::Approx(-2.0 * 1.0 + 2.0 + 3.5).epsilon(1e-12));
  }

  SUBCASE("three-arm toy with borrowing matches hand arithmetic") {
    ms::MultiLayout layout = three_arm_toy();
    BorrowParams params;
    params.lambda.resize(1);
    params.lambda[0][0] = 0.5;
    params.lambda[0][2] = 1.0;
    ms::Contrast c{{{0, -1.0}, {2, 1.0}}};
    const double mu0 = (50 * 1.0 + 0.5 * 100 * 1.2) / (50 + 50.0);
    const double mu2 = (70 * 3.5 + 80 * 3.0) / 150.0;
    CHECK(ms::contrast_effect(params, layout, c) ==
          doctest::Approx(mu2 - mu0).epsilon(1e-12));
  }

  SUBCASE("empty contrast is rejected") {
    ms::Contrast empty;
    CHECK_THROWS_AS(ms::contrast_effect(BorrowParams::none(), three_arm_toy(), empty),
                    std::invalid_argument);
  }
}

TEST_CASE("contrast_bias_plus") {
  SUBCASE("two-arm case equals the primary bias_plus") {
    Rng rng(91);
    for (int rep = 0; rep < 500; ++rep) {
      const OutcomeKind kind =
          rng.next_bernoulli(0.5) ? OutcomeKind::binary : OutcomeKind::continuous;
      TrialLayout two = testing::random_layout(rng, kind);
      BorrowParams params =
          BorrowParams::two_arm(rng.next_uniform(), rng.next_uniform());
      RadiusSpec radii =
          RadiusSpec::two_arm(0.4 * rng.next_uniform(), 0.4 * rng.next_uniform());
      WeightProfile weights = weight_profile(params, two);
      std::array<std::optional<double>, 2> centers{*two.current[0].mean,
                                                   *two.current[1].mean};
      const double direct =
          bias_plus(weights, radii, kind, centers, CorrectionMode::plug_in);
      const double via_contrast =
          ms::contrast_bias_plus(params, ms::from_two_arm(two),
                                 ms::Contrast::two_arm(), radii,
                                 CorrectionMode::plug_in);
      CHECK(via_contrast == doctest::Approx(direct).epsilon(1e-12));
    }
  }

  SUBCASE("positive homogeneity in the contrast") {
    ms::MultiLayout layout = three_arm_toy();
    BorrowParams params;
    params.lambda.resize(1);
    params.lambda[0][0] = 0.4;
    params.lambda[0][2] = 0.7;
    RadiusSpec radii;
    radii.rho.resize(1);
    radii.rho[0][0] = 0.1;
    radii.rho[0][2] = 0.2;
    ms::Contrast c{{{0, -1.0}, {2, 1.0}}};
    ms::Contrast c3{{{0, -3.0}, {2, 3.0}}};
    const double b = ms::contrast_bias_plus(params, layout, c, radii,
                                            CorrectionMode::plug_in);
    const double b3 = ms::contrast_bias_plus(params, layout, c3, radii,
                                             CorrectionMode::plug_in);
    CHECK(b3 == doctest::Approx(3.0 * b).epsilon(1e-12));
  }

  SUBCASE("continuous two sources sum w * rho over all cells") {
    // Both sources at lambda = 1 with n_H = n_C give w = 1/3 per cell.
    TrialLayout two;
    two.kind = OutcomeKind::continuous;
    two.current[0] = ArmSummary::from_moments(100, 0.0, 1.0);
    two.current[1] = ArmSummary::from_moments(100, 1.0, 1.0);
    two.historical.resize(2);
    for (int k = 0; k < 2; ++k) {
      two.historical[k][0] = ArmSummary::from_moments(100, 0.0, 1.0);
      two.historical[k][1] = ArmSummary::from_moments(100, 1.0, 1.0);
    }
    BorrowParams params;
    params.lambda = {{{0, 1.0}, {1, 1.0}}, {{0, 1.0}, {1, 1.0}}};
    RadiusSpec radii;
    radii.rho = {{{0, 0.1}, {1, 0.1}}, {{0, 0.1}, {1, 0.1}}};
    const double b = ms::contrast_bias_plus(params, ms::from_two_arm(two),
                                            ms::Contrast::two_arm(), radii,
                                            CorrectionMode::plug_in);
    CHECK(b == doctest::Approx(4.0 * 0.1 / 3.0).epsilon(1e-12));
  }

  SUBCASE("flipping the contrast maps b+ into -b-") {
    Rng rng(101);
    for (int rep = 0; rep < 300; ++rep) {
      TrialLayout two = testing::random_layout(rng, OutcomeKind::binary);
      BorrowParams params =
          BorrowParams::two_arm(rng.next_uniform(), rng.next_uniform());
      RadiusSpec radii =
          RadiusSpec::two_arm(0.3 * rng.next_uniform(), 0.3 * rng.next_uniform());
      ms::MultiLayout layout = ms::from_two_arm(two);
      ms::Contrast c = ms::Contrast::two_arm();
      ms::Contrast flipped{{{0, 1.0}, {1, -1.0}}};
      const double bp_flipped = ms::contrast_bias_plus(params, layout, flipped, radii,
                                                       CorrectionMode::plug_in);
      const double bm = ms::contrast_bias_minus(params, layout, c, radii,
                                                CorrectionMode::plug_in);
      CHECK(bp_flipped == doctest::Approx(-bm).epsilon(1e-12));
    }
  }

  SUBCASE("missing radius cell is an error") {
    ms::MultiLayout layout = three_arm_toy();
    BorrowParams params;
    params.lambda.resize(1);
    params.lambda[0][0] = 0.4;
    RadiusSpec radii;  // empty
    ms::Contrast c{{{0, -1.0}, {2, 1.0}}};
    CHECK_THROWS_AS(ms::contrast_bias_plus(params, layout, c, radii,
                                           CorrectionMode::plug_in),
                    std::invalid_argument);
  }
}

TEST_CASE("contrast_test at zero borrowing is the classical contrast Wald test") {
  ms::MultiLayout layout = three_arm_toy();
  ms::Contrast c{{{0, -1.0}, {2, 1.0}}};
  RadiusSpec radii;
  radii.rho = {{{0, 0.3}, {2, 0.3}}};
  RobustTestResult res =
      ms::contrast_test(BorrowParams::none(), layout, c, radii, 0.025);
  const double theta = 3.5 - 1.0;
  const double s = std::sqrt(1.0 / 50 + 1.0 / 70);
  CHECK(res.theta_hat == doctest::Approx(theta).epsilon(1e-12));
  CHECK(res.s_hat == doctest::Approx(s).epsilon(1e-12));
  CHECK(res.corrections.plus == 0.0);
  CHECK(res.statistic_upper == doctest::Approx(theta / s).epsilon(1e-12));
}

TEST_CASE("contrast_test agrees with the single-source test") {
  Rng rng(111);
  for (int rep = 0; rep < 300; ++rep) {
    const OutcomeKind kind =
        rng.next_bernoulli(0.5) ? OutcomeKind::binary : OutcomeKind::continuous;
    TrialLayout two = testing::random_layout(rng, kind);
    BorrowParams params = BorrowParams::two_arm(rng.next_uniform(), rng.next_uniform());
    RadiusSpec radii =
        RadiusSpec::two_arm(0.3 * rng.next_uniform(), 0.3 * rng.next_uniform());
    RobustTestResult direct = test_one_sided(two, params, radii, 0.025);
    RobustTestResult via = ms::contrast_test(params, ms::from_two_arm(two),
                                             ms::Contrast::two_arm(), radii, 0.025);
    CHECK(via.theta_hat == doctest::Approx(direct.theta_hat).epsilon(1e-12));
    CHECK(via.s_hat == doctest::Approx(direct.s_hat).epsilon(1e-12));
    CHECK(via.statistic_upper == doctest::Approx(direct.statistic_upper).epsilon(1e-12));
    CHECK(via.reject == direct.reject);
  }
}

TEST_CASE("multisource weights sum to one per arm") {
  ms::MultiLayout layout = three_arm_toy();
  layout.historical.push_back(layout.historical[0]);
  BorrowParams params;
  params.lambda.resize(2);
  Rng rng(121);
  for (int rep = 0; rep < 100; ++rep) {
    for (std::size_t k = 0; k < 2; ++k)
      for (int arm : {0, 2}) params.lambda[k][arm] = rng.next_uniform();
    ms::MultiWeights w = ms::weight_profile(params, layout);
    for (int arm : {0, 2}) {
      double total = w.current.at(arm);
      for (const auto& h : w.historical)
        if (auto it = h.find(arm); it != h.end()) total += it->second;
      CHECK(total == doctest::Approx(1.0).epsilon(1e-15));
    }
  }
}

TEST_CASE("contrast test: two-source least-favorable null keeps size") {
  Rng rng(131);
  const double rho = 0.12;
  int rejects = 0;
  const int reps = 2000;
  BorrowParams params;
  params.lambda = {{{0, 1.0}, {1, 1.0}}, {{0, 1.0}, {1, 1.0}}};
  RadiusSpec radii;
  radii.rho = {{{0, rho}, {1, rho}}, {{0, rho}, {1, rho}}};
  for (int rep = 0; rep < reps; ++rep) {
    auto cell = [&](double mean, std::size_t n) {
      std::vector<double> v(n);
      for (auto& x : v) x = mean + rng.next_normal();
      return summarize(v, OutcomeKind::continuous);
    };
    ms::MultiLayout layout;
    layout.kind = OutcomeKind::continuous;
    layout.current[0] = cell(0.0, 150);
    layout.current[1] = cell(0.0, 150);
    layout.historical.resize(2);
    for (int k = 0; k < 2; ++k) {
      layout.historical[k][0] = cell(-rho, 150);
      layout.historical[k][1] = cell(rho, 150);
    }
    rejects += ms::contrast_test(params, layout, ms::Contrast::two_arm(), radii, 0.025)
                   .reject;
  }
  const double rate = static_cast<double>(rejects) / reps;
  const double se = std::sqrt(0.025 * 0.975 / reps);
  CHECK(rate <= 0.025 + 3.0 * se);
  CHECK(rate >= 0.025 - 3.0 * se);
}

TEST_CASE("multisource select_lambda collapses to the primary one") {
  BorrowConfig config;
  config.theta1 = 0.15;
  TrialLayout two = testing::orr_layout();
  CalibrationResult primary =
      select_lambda(two, RadiusSpec::control_only(0.01), config);
  ms::ContrastCalibration viac =
      ms::select_lambda(ms::from_two_arm(two), ms::Contrast::two_arm(),
                        RadiusSpec::control_only(0.01), config);
  CHECK(viac.lambda_hat.at(0, 0) == primary.lambda_hat.at(0, 0));
  CHECK(viac.kappa_hat == doctest::Approx(primary.kappa_hat).epsilon(1e-12));
}

TEST_CASE("coarsen") {
  SUBCASE("identity label map keeps groups") {
    std::vector<std::pair<std::string, double>> records{
        {"a", 1.0}, {"b", 2.0}, {"a", 3.0}};
    std::map<std::string, int> m{{"a", 0}, {"b", 1}};
    auto groups = ms::coarsen_labels(records, m);
    CHECK(groups[0] == std::vector<double>{1.0, 3.0});
    CHECK(groups[1] == std::vector<double>{2.0});
  }

  SUBCASE("dose bins") {
    std::vector<std::pair<double, double>> records{{5.0, 1.0}, {15.0, 0.0}};
    auto groups = ms::coarsen_doses(records, {0.0, 10.0});
    REQUIRE(groups.size() == 2);
    CHECK(groups[0].size() == 1);
    CHECK(groups[1].size() == 1);
  }

  SUBCASE("unmapped labels are listed") {
    std::vector<std::pair<std::string, double>> records{{"a", 1.0}, {"zzz", 2.0}};
    std::map<std::string, int> m{{"a", 0}};
    CHECK_THROWS_WITH_AS(ms::coarsen_labels(records, m), doctest::Contains("zzz"),
                         std::invalid_argument);
  }

  SUBCASE("random partition equals a brute-force grouping") {
    Rng rng(141);
    for (int rep = 0; rep < 50; ++rep) {
      std::vector<std::pair<std::string, double>> records;
      std::map<std::string, int> m;
      for (int l = 0; l < 5; ++l)
        m["label" + std::to_string(l)] = static_cast<int>(rng.next_u64() % 3);
      std::map<int, std::vector<double>> expect;
      for (int i = 0; i < 100; ++i) {
        const std::string label = "label" + std::to_string(rng.next_u64() % 5);
        const double y = rng.next_uniform();
        records.push_back({label, y});
        expect[m[label]].push_back(y);
      }
      CHECK(ms::coarsen_labels(records, m) == expect);
    }
  }

  SUBCASE("bin edges must increase") {
    std::vector<std::pair<double, double>> records{{1.0, 0.0}};
    CHECK_THROWS_AS(ms::coarsen_doses(records, {1.0, 1.0}), std::invalid_argument);
  }
}
