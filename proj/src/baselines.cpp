#include "bond/baselines.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "bond/normal.hpp"

namespace bond {

namespace {

double lbeta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

double log_normal_pdf(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * (std::log(2.0 * 3.14159265358979323846 * var) + d * d / var);
}

struct ArmData {
  double n_c, ybar_c, var_c, v_c;  // v = var / n
  bool has_hist = false;
  double n_h = 0.0, ybar_h = 0.0, var_h = 0.0, v_h = 0.0;
  std::size_t n_c_int = 0, n_h_int = 0;
};

ArmData arm_data(const TrialLayout& layout, int arm) {
  ArmData d;
  const ArmSummary& cur = layout.current[arm];
  d.n_c_int = cur.n;
  d.n_c = static_cast<double>(cur.n);
  d.ybar_c = *cur.mean;
  d.var_c = *cur.variance;
  d.v_c = d.var_c / d.n_c;
  const ArmSummary* hist = layout.historical_cell(0, arm);
  if (hist && hist->n >= 1) {
    if (hist->n < 2)
      throw std::invalid_argument(
          "baseline: historical cell needs n >= 2 (arm " + std::to_string(arm) + ")");
    d.has_hist = true;
    d.n_h_int = hist->n;
    d.n_h = static_cast<double>(hist->n);
    d.ybar_h = *hist->mean;
    d.var_h = *hist->variance;
    d.v_h = d.var_h / d.n_h;
  }
  return d;
}

BaselineArm current_only_arm(const ArmData& d, OutcomeKind kind, bool bayes) {
  BaselineArm a;
  a.mu_hat = d.ybar_c;
  a.center = d.ybar_c;
  if (bayes && kind == OutcomeKind::binary)
    a.var = d.ybar_c * (1.0 - d.ybar_c) / (d.n_c + 1.0);
  else
    a.var = d.v_c;
  return a;
}

// Plain EBW arm with the sampling variance of the convex combination.
BaselineArm ebw_arm(const ArmData& d, double lambda) {
  BaselineArm a;
  const double w = weight(lambda, d.n_c_int, d.n_h_int);
  a.w_total = a.w_hist = w;
  a.center = d.ybar_h;
  a.mu_hat = (1.0 - w) * d.ybar_c + w * d.ybar_h;
  a.var = (1.0 - w) * (1.0 - w) * d.v_c + w * w * d.v_h;
  return a;
}

void fill_borrow_stats(BaselineArm& a, const ArmData& d) {
  if (d.has_hist && a.w_hist > 0.0) {
    a.lambda_eff = weight_inverse(a.w_hist, d.n_c_int, d.n_h_int);
    a.eff_borrowed = a.lambda_eff * d.n_h;
  }
}

BaselineArm power_prior_arm(const ArmData& d, OutcomeKind kind, double lambda) {
  // Weakly informative limit: the posterior mean is exactly the EBW estimator;
  // the posterior variance keeps the Bayesian precision n_C + lambda*n_H.
  BaselineArm a = ebw_arm(d, lambda);
  const double n_eff = d.n_c + lambda * d.n_h;
  if (kind == OutcomeKind::binary) {
    a.var = a.mu_hat * (1.0 - a.mu_hat) / (n_eff + 1.0);
  } else {
    const double pooled =
        ((d.n_c - 1.0) * d.var_c + lambda * (d.n_h - 1.0) * d.var_h) /
        ((d.n_c - 1.0) + lambda * (d.n_h - 1.0));
    a.var = pooled / n_eff;
  }
  return a;
}

BaselineArm commensurate_arm(const ArmData& d, double tau) {
  // lambda(tau) = sigma^2 tau / (sigma^2 tau + n_H), sigma^2 from the current arm.
  const double lambda = d.var_c * tau / (d.var_c * tau + d.n_h);
  BaselineArm a = ebw_arm(d, lambda);
  a.var = d.var_c / (d.n_c + lambda * d.n_h);
  return a;
}

BaselineArm robust_map_arm(const ArmData& d, OutcomeKind kind, double epsilon,
                           const std::vector<double>& discounts) {
  struct Component {
    double log_ml;
    double prior_w;
    double w;       // shrink weight toward the component center
    double center;  // component prior mean
    double var;     // component posterior variance
    double w_hist;  // historical-attributable part of w
  };
  std::vector<Component> comps;
  const double info_w = (1.0 - epsilon) / static_cast<double>(discounts.size());

  if (kind == OutcomeKind::binary) {
    const double s_c = d.ybar_c * d.n_c;
    const double s_h = d.ybar_h * d.n_h;
    auto beta_component = [&](double pa, double pb, double prior_w, double w_hist) {
      Component c;
      c.prior_w = prior_w;
      c.log_ml = lbeta(pa + s_c, pb + d.n_c - s_c) - lbeta(pa, pb);
      const double total = pa + pb;
      c.w = total / (total + d.n_c);
      c.center = pa / total;
      const double m = (pa + s_c) / (total + d.n_c);
      c.var = m * (1.0 - m) / (total + d.n_c + 1.0);
      c.w_hist = w_hist / (total + d.n_c);
      return c;
    };
    for (double disc : discounts)
      comps.push_back(beta_component(1.0 + disc * s_h, 1.0 + disc * (d.n_h - s_h),
                                     info_w, disc * d.n_h));
    comps.push_back(beta_component(1.0, 1.0, epsilon, 0.0));
  } else {
    auto normal_component = [&](double pm, double pv, double prior_w, bool hist) {
      Component c;
      c.prior_w = prior_w;
      c.log_ml = log_normal_pdf(d.ybar_c, pm, pv + d.v_c);
      c.w = d.v_c / (d.v_c + pv);
      c.center = pm;
      c.var = 1.0 / (1.0 / d.v_c + 1.0 / pv);
      c.w_hist = hist ? c.w : 0.0;
      return c;
    };
    for (double disc : discounts)
      comps.push_back(normal_component(d.ybar_h, d.v_h / disc, info_w, true));
    // Vague component: unit-information normal at the current mean.
    comps.push_back(normal_component(d.ybar_c, d.var_c, epsilon, false));
  }

  double max_log = -std::numeric_limits<double>::infinity();
  for (const auto& c : comps)
    max_log = std::max(max_log, c.log_ml + std::log(c.prior_w));
  double norm = 0.0;
  std::vector<double> post(comps.size());
  for (std::size_t i = 0; i < comps.size(); ++i) {
    post[i] = std::exp(comps[i].log_ml + std::log(comps[i].prior_w) - max_log);
    norm += post[i];
  }

  BaselineArm a;
  double mean = 0.0, second = 0.0;
  for (std::size_t i = 0; i < comps.size(); ++i) {
    const double omega = post[i] / norm;
    const double m_i = (1.0 - comps[i].w) * d.ybar_c + comps[i].w * comps[i].center;
    mean += omega * m_i;
    second += omega * (comps[i].var + m_i * m_i);
    a.w_total += omega * comps[i].w;
    a.w_hist += omega * comps[i].w_hist;
    a.center += omega * comps[i].w * comps[i].center;
  }
  a.mu_hat = mean;
  a.var = second - mean * mean;
  a.center = (a.w_total > 0.0) ? a.center / a.w_total : d.ybar_c;
  return a;
}

BaselineArm elastic_arm(const ArmData& d, OutcomeKind kind, double scale) {
  const double t = (d.ybar_h - d.ybar_c) / std::sqrt(d.v_h + d.v_c);
  const double g = std::exp(-t * t / (2.0 * scale * scale));
  const double lambda =
      (kind == OutcomeKind::binary) ? g : g * d.var_c / d.var_h;
  BaselineArm a = ebw_arm(d, lambda);
  if (kind == OutcomeKind::binary)
    a.var = a.mu_hat * (1.0 - a.mu_hat) / (d.n_c + g * d.n_h + 1.0);
  else
    a.var = 1.0 / (d.n_c / d.var_c + g * d.n_h / d.var_h);
  return a;
}

BaselineArm uip_arm(const ArmData& d, OutcomeKind kind, double m_budget) {
  BaselineArm a;
  if (kind == OutcomeKind::binary) {
    if (m_budget <= 1.0)
      throw std::invalid_argument("uip: binary outcomes need M > 1");
    if (!(d.ybar_h > 0.0 && d.ybar_h < 1.0))
      throw std::invalid_argument("uip: degenerate historical rate");
    const double prior_ess = m_budget - 1.0;  // alpha + beta from moment matching
    a.w_total = a.w_hist = prior_ess / (d.n_c + prior_ess);
    a.center = d.ybar_h;
    a.mu_hat = (1.0 - a.w_total) * d.ybar_c + a.w_total * d.ybar_h;
    a.var = a.mu_hat * (1.0 - a.mu_hat) / (d.n_c + prior_ess + 1.0);
  } else {
    const double prior_prec = m_budget / d.var_h;  // 1/eta^2
    const double data_prec = d.n_c / d.var_c;
    a.w_total = a.w_hist = prior_prec / (data_prec + prior_prec);
    a.center = d.ybar_h;
    a.mu_hat = (1.0 - a.w_total) * d.ybar_c + a.w_total * d.ybar_h;
    a.var = 1.0 / (data_prec + prior_prec);
  }
  return a;
}

BaselineArm mem_arm(const ArmData& d, double inclusion) {
  // Two-model average (single source): exchangeable vs independent, with
  // empirical unit-information priors making the Bayes factor well-defined.
  const double pooled_var =
      ((d.n_c - 1.0) * d.var_c + (d.n_h - 1.0) * d.var_h) / (d.n_c + d.n_h - 2.0);
  const double prec = 1.0 / d.v_c + 1.0 / d.v_h;
  const double m_p = (d.ybar_c / d.v_c + d.ybar_h / d.v_h) / prec;
  const double s2 = pooled_var;

  // Exchangeable model: (ybar_C, ybar_H) are jointly normal around m_p with
  // shared-mean covariance s2 off the diagonal.
  const double a11 = s2 + d.v_c, a22 = s2 + d.v_h, a12 = s2;
  const double det = a11 * a22 - a12 * a12;
  const double dc = d.ybar_c - m_p, dh = d.ybar_h - m_p;
  const double quad = (a22 * dc * dc - 2.0 * a12 * dc * dh + a11 * dh * dh) / det;
  const double log_m1 = -0.5 * (std::log(4.0 * 3.14159265358979323846 *
                                         3.14159265358979323846 * det) +
                                quad);
  const double log_m0 =
      log_normal_pdf(d.ybar_c, m_p, s2 + d.v_c) + log_normal_pdf(d.ybar_h, m_p, s2 + d.v_h);

  const double log_post1 = std::log(inclusion) + log_m1;
  const double log_post0 = std::log(1.0 - inclusion) + log_m0;
  const double mx = std::max(log_post1, log_post0);
  const double p1 = std::exp(log_post1 - mx);
  const double p0 = std::exp(log_post0 - mx);
  const double omega1 = p1 / (p0 + p1);

  const double w1 = (1.0 / d.v_h) / prec;  // pooled-model weight on the historical mean
  const double m1 = m_p;                   // pooled-model posterior mean (flat prior)
  const double var1 = 1.0 / prec;

  BaselineArm a;
  a.w_total = a.w_hist = omega1 * w1;
  a.center = d.ybar_h;
  a.mu_hat = (1.0 - omega1) * d.ybar_c + omega1 * m1;
  const double second = (1.0 - omega1) * (d.v_c + d.ybar_c * d.ybar_c) +
                        omega1 * (var1 + m1 * m1);
  a.var = second - a.mu_hat * a.mu_hat;
  return a;
}

void check_spec(const BaselineSpec& spec) {
  switch (spec.method) {
    case BaselineMethod::fixed_lambda:
    case BaselineMethod::power_prior:
      if (spec.lambda_fixed < 0.0 || spec.lambda_fixed > 1.0)
        throw std::invalid_argument("baseline: lambda must lie in [0, 1]");
      break;
    case BaselineMethod::ttp:
      if (!(spec.alpha_pool > 0.0 && spec.alpha_pool < 1.0))
        throw std::invalid_argument("baseline: alpha_pool must lie in (0, 1)");
      if (spec.lambda_pool < 0.0)
        throw std::invalid_argument("baseline: lambda_pool must be >= 0");
      break;
    case BaselineMethod::commensurate:
      if (!(spec.tau > 0.0)) throw std::invalid_argument("baseline: tau must be > 0");
      break;
    case BaselineMethod::robust_map:
      if (!(spec.epsilon > 0.0 && spec.epsilon < 1.0))
        throw std::invalid_argument("baseline: epsilon must lie in (0, 1)");
      if (spec.map_discounts.empty())
        throw std::invalid_argument("baseline: robust_map needs informative components");
      for (double disc : spec.map_discounts)
        if (!(disc > 0.0 && disc <= 1.0))
          throw std::invalid_argument("baseline: MAP discounts must lie in (0, 1]");
      break;
    case BaselineMethod::elastic:
      if (!(spec.elastic_scale > 0.0))
        throw std::invalid_argument("baseline: elastic scale must be > 0");
      break;
    case BaselineMethod::uip:
      if (spec.uip_m < 0.0) throw std::invalid_argument("baseline: M must be >= 0");
      break;
    case BaselineMethod::mem:
      if (!(spec.mem_inclusion > 0.0 && spec.mem_inclusion < 1.0))
        throw std::invalid_argument("baseline: inclusion probability must lie in (0, 1)");
      break;
    default:
      break;
  }
}

}  // namespace

std::string baseline_name(BaselineMethod m) {
  switch (m) {
    case BaselineMethod::current_only: return "current_only";
    case BaselineMethod::naive_pool: return "naive_pool";
    case BaselineMethod::fixed_lambda: return "fixed_lambda";
    case BaselineMethod::ttp: return "ttp";
    case BaselineMethod::power_prior: return "power_prior";
    case BaselineMethod::commensurate: return "commensurate";
    case BaselineMethod::robust_map: return "robust_map";
    case BaselineMethod::elastic: return "elastic";
    case BaselineMethod::uip: return "uip";
    case BaselineMethod::mem: return "mem";
  }
  return "unknown";
}

int ttp_screen(const TrialLayout& layout, double alpha_pool, int arm) {
  const ArmData d = arm_data(layout, arm);
  if (!d.has_hist)
    throw std::invalid_argument("ttp_screen: historical cell missing for arm " +
                                std::to_string(arm));
  const double t = (d.ybar_h - d.ybar_c) / std::sqrt(d.v_h + d.v_c);
  return std::abs(t) <= normal_quantile(1.0 - alpha_pool / 2.0) ? 1 : 0;
}

BaselineResult run_baseline(const BaselineSpec& spec, const TrialLayout& layout,
                            double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("alpha must lie in (0, 1)");
  check_spec(spec);
  require_valid(layout);
  if (layout.historical.size() > 1)
    throw std::invalid_argument(
        "baselines are single-source rules; use the multisource module or BOND");

  const bool bayes = spec.method == BaselineMethod::power_prior ||
                     spec.method == BaselineMethod::commensurate ||
                     spec.method == BaselineMethod::robust_map ||
                     spec.method == BaselineMethod::elastic ||
                     spec.method == BaselineMethod::uip ||
                     spec.method == BaselineMethod::mem;

  BaselineResult res;
  res.spec = spec;
  res.alpha = alpha;
  res.bayesian_decision = bayes;

  for (int arm = 0; arm < 2; ++arm) {
    const ArmData d = arm_data(layout, arm);
    BaselineArm a;
    if (spec.method == BaselineMethod::current_only || !d.has_hist) {
      a = current_only_arm(d, layout.kind, bayes);
      a.degraded = spec.method != BaselineMethod::current_only && !d.has_hist;
    } else {
      switch (spec.method) {
        case BaselineMethod::naive_pool:
          a = ebw_arm(d, 1.0);
          break;
        case BaselineMethod::fixed_lambda:
          a = ebw_arm(d, spec.lambda_fixed);
          break;
        case BaselineMethod::ttp:
          a = ebw_arm(d, ttp_screen(layout, spec.alpha_pool, arm) * spec.lambda_pool);
          break;
        case BaselineMethod::power_prior:
          a = power_prior_arm(d, layout.kind, spec.lambda_fixed);
          break;
        case BaselineMethod::commensurate:
          a = commensurate_arm(d, spec.tau);
          break;
        case BaselineMethod::robust_map:
          a = robust_map_arm(d, layout.kind, spec.epsilon, spec.map_discounts);
          break;
        case BaselineMethod::elastic:
          a = elastic_arm(d, layout.kind, spec.elastic_scale);
          break;
        case BaselineMethod::uip:
          a = uip_arm(d, layout.kind, spec.uip_m);
          break;
        case BaselineMethod::mem:
          a = mem_arm(d, spec.mem_inclusion);
          break;
        default:
          a = current_only_arm(d, layout.kind, bayes);
          break;
      }
    }
    fill_borrow_stats(a, d);
    res.arms[arm] = a;
  }

  res.theta_hat = res.arms[1].mu_hat - res.arms[0].mu_hat;
  res.sd = std::sqrt(res.arms[0].var + res.arms[1].var);
  res.statistic = res.theta_hat / res.sd;
  res.reject = res.statistic >= normal_quantile(1.0 - alpha);
  res.p_one_sided = normal_sf(res.statistic);
  return res;
}

WeightProfile effective_weight_of(const BaselineSpec& spec, const TrialLayout& layout,
                                  double alpha) {
  const BaselineResult res = run_baseline(spec, layout, alpha);
  WeightProfile prof;
  prof.historical.assign(std::max<std::size_t>(layout.historical.size(), 1), {0.0, 0.0});
  for (int arm = 0; arm < 2; ++arm) {
    prof.historical[0][arm] = res.arms[arm].w_hist;
    prof.current[arm] = 1.0 - res.arms[arm].w_hist;
  }
  return prof;
}

}  // namespace bond
