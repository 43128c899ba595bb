#pragma once

#include <array>
#include <string>
#include <vector>

#include "bond/ebw.hpp"

namespace bond {

enum class BaselineMethod {
  current_only,
  naive_pool,
  fixed_lambda,
  ttp,
  power_prior,
  commensurate,
  robust_map,
  elastic,
  uip,
  mem,
};

std::string baseline_name(BaselineMethod m);

struct BaselineSpec {
  BaselineMethod method = BaselineMethod::current_only;
  double lambda_fixed = 0.5;                        // fixed_lambda, power_prior
  double alpha_pool = 0.1;                          // ttp screen level
  double lambda_pool = 1.0;                         // ttp pooling intensity
  double tau = 1.0;                                 // commensurate precision
  double epsilon = 0.2;                             // robust_map vague weight
  std::vector<double> map_discounts = {0.25, 1.0};  // robust_map informative components
  double elastic_scale = 1.0;
  double uip_m = 100.0;                             // information budget M
  double mem_inclusion = 0.5;                       // prior P(exchangeable)
};

// One arm's affine decomposition: mu_hat = (1 - w_total)*ybar_C +
// w_total*center, exactly. w_hist is the historical-data-attributable part of
// w_total (prior pseudo-mass excluded), which drives the effective borrowed
// sample size.
struct BaselineArm {
  double mu_hat = 0.0;
  double w_total = 0.0;
  double center = 0.0;
  double w_hist = 0.0;
  double lambda_eff = 0.0;
  double eff_borrowed = 0.0;
  double var = 0.0;  // the method's own variance for this arm's estimate
  bool degraded = false;  // no historical data: fell back to current-only
};

struct BaselineResult {
  BaselineSpec spec;
  std::array<BaselineArm, 2> arms;
  double theta_hat = 0.0;
  double sd = 0.0;  // sampling sd (frequentist rules) or posterior sd (Bayesian)
  double statistic = 0.0;
  bool reject = false;
  double p_one_sided = 1.0;
  double alpha = 0.025;
  bool bayesian_decision = false;
};

// Runs one classical borrowing rule on a two-arm, single-historical-source
// layout. Frequentist rules decide by a Wald statistic with the sampling
// variance of the EBW estimator; Bayesian rules decide by the posterior tail
// probability under their own conjugate (normal-approximated) posterior.
BaselineResult run_baseline(const BaselineSpec& spec, const TrialLayout& layout,
                            double alpha);

// Test-then-pool screen: two-sample Wald statistic on the given arm, pooling
// (eta = 1) upon fail-to-reject at level alpha_pool (boundary inclusive).
int ttp_screen(const TrialLayout& layout, double alpha_pool, int arm = 0);

// Implied per-arm weights, for auditing any baseline with the robust bias
// corrections.
WeightProfile effective_weight_of(const BaselineSpec& spec, const TrialLayout& layout,
                                  double alpha = 0.025);

}  // namespace bond
