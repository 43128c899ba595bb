#include "bond/sim.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "bond/rng.hpp"
#include "bond/transport.hpp"

namespace bond {
namespace sim {

namespace {

double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// E[expit(m + s Z)], Z standard normal. No closed form; evaluated once per
// (m, s) with 10^6 deterministic draws and cached (absolute error ~1e-3).
double expit_normal_mean(double m, double s) {
  if (s == 0.0) return expit(m);
  struct Key {
    std::uint64_t m_bits, s_bits;
    bool operator<(const Key& o) const {
      return m_bits != o.m_bits ? m_bits < o.m_bits : s_bits < o.s_bits;
    }
  };
  static std::map<Key, double> cache;
  static std::mutex mu;
  Key key{std::bit_cast<std::uint64_t>(m), std::bit_cast<std::uint64_t>(s)};
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  Rng rng(derive_seed(0x0b0d0e5eedULL, {key.m_bits, key.s_bits}));
  const std::size_t draws = 1000000;
  double sum = 0.0;
  for (std::size_t i = 0; i < draws; ++i) sum += expit(m + s * rng.next_normal());
  const double value = sum / static_cast<double>(draws);
  std::lock_guard<std::mutex> lock(mu);
  cache.emplace(key, value);
  return value;
}

std::uint64_t scenario_id(Scenario s) { return static_cast<std::uint64_t>(s); }

}  // namespace

std::string scenario_name(Scenario s) {
  switch (s) {
    case Scenario::commensurate: return "commensurate";
    case Scenario::covshift_effectmod: return "covshift_effectmod";
    case Scenario::control_drift: return "control_drift";
  }
  return "unknown";
}

ScenarioConfig ScenarioConfig::make(Scenario s, OutcomeKind kind, double gamma) {
  if (gamma < 0.0) throw std::invalid_argument("gamma must be >= 0");
  ScenarioConfig c;
  c.scenario = s;
  c.kind = kind;
  c.gamma = gamma;
  c.beta0 = (kind == OutcomeKind::binary) ? -1.0 : 0.0;
  switch (s) {
    case Scenario::commensurate:
      break;
    case Scenario::covshift_effectmod:
      c.cov_shift = {gamma, gamma};
      c.effect_mod = {0.3, 0.3};
      break;
    case Scenario::control_drift:
      c.drift0 = gamma;
      c.historical_has_treatment = false;
      break;
  }
  return c;
}

double ScenarioConfig::true_mean(bool historical, int arm) const {
  const double a = static_cast<double>(arm);
  std::array<double, 2> slope{beta[0] + a * effect_mod[0], beta[1] + a * effect_mod[1]};
  double loc = beta0 + theta * a;
  if (historical) {
    loc += cov_shift[0] * slope[0] + cov_shift[1] * slope[1];
    loc += (arm == 0) ? drift0 : drift1;
  }
  if (kind == OutcomeKind::continuous) return loc;
  const double s = std::sqrt(slope[0] * slope[0] + slope[1] * slope[1]);
  return expit_normal_mean(loc, s);
}

double ScenarioConfig::true_variance_continuous(int arm) const {
  const double a = static_cast<double>(arm);
  std::array<double, 2> slope{beta[0] + a * effect_mod[0], beta[1] + a * effect_mod[1]};
  return slope[0] * slope[0] + slope[1] * slope[1] + sigma * sigma;
}

TrialData generate_trial(const ScenarioConfig& config, std::uint64_t seed) {
  Rng rng(seed);
  TrialData data;
  data.historical.resize(1);

  auto draw = [&](bool historical, std::map<int, std::vector<double>>& out) {
    const std::size_t n = historical ? config.n_historical : config.n_current;
    for (std::size_t i = 0; i < n; ++i) {
      int a;
      if (historical && !config.historical_has_treatment) a = 0;
      else a = rng.next_bernoulli(config.allocation) ? 1 : 0;
      const double shift0 = historical ? config.cov_shift[0] : 0.0;
      const double shift1 = historical ? config.cov_shift[1] : 0.0;
      const double x0 = shift0 + rng.next_normal();
      const double x1 = shift1 + rng.next_normal();
      double lin = config.beta0 + x0 * config.beta[0] + x1 * config.beta[1] +
                   config.theta * a +
                   a * (x0 * config.effect_mod[0] + x1 * config.effect_mod[1]);
      if (historical) lin += (a == 0) ? config.drift0 : config.drift1;
      double y;
      if (config.kind == OutcomeKind::continuous)
        y = lin + config.sigma * rng.next_normal();
      else
        y = rng.next_bernoulli(expit(lin)) ? 1.0 : 0.0;
      out[a].push_back(y);
    }
  };

  draw(false, data.current);
  draw(true, data.historical[0]);

  data.layout.kind = config.kind;
  for (int a = 0; a < 2; ++a) {
    auto it = data.current.find(a);
    data.layout.current[a] =
        (it != data.current.end()) ? summarize(it->second, config.kind) : ArmSummary{};
  }
  data.layout.historical.resize(1);
  for (const auto& [arm, samples] : data.historical[0])
    if (!samples.empty())
      data.layout.historical[0][arm] = summarize(samples, config.kind);
  return data;
}

double calibrate_binary_theta(const ScenarioConfig& config, double target_rd,
                              std::size_t mc_draws, double tol, std::uint64_t seed) {
  if (config.kind != OutcomeKind::binary)
    throw std::invalid_argument("calibrate_binary_theta: binary outcomes only");
  if (std::abs(target_rd) >= 1.0)
    throw std::invalid_argument("calibrate_binary_theta: |target| must be < 1");
  if (mc_draws < 100000)
    throw std::invalid_argument("calibrate_binary_theta: need at least 1e5 draws");

  // Common random numbers across bisection iterations keep RD(theta) exactly
  // monotone in theta.
  Rng rng(seed);
  std::vector<std::array<double, 2>> xs(mc_draws);
  for (auto& x : xs) x = {rng.next_normal(), rng.next_normal()};

  auto rd = [&](double t) {
    double sum = 0.0;
    for (const auto& x : xs) {
      const double base = config.beta0 + x[0] * config.beta[0] + x[1] * config.beta[1];
      const double treated =
          base + t + x[0] * config.effect_mod[0] + x[1] * config.effect_mod[1];
      sum += expit(treated) - expit(base);
    }
    return sum / static_cast<double>(mc_draws);
  };

  double lo = -20.0, hi = 20.0;
  double f_lo = rd(lo) - target_rd, f_hi = rd(hi) - target_rd;
  if (f_lo > 0.0 || f_hi < 0.0)
    throw std::domain_error("calibrate_binary_theta: target not bracketed");
  double mid = 0.0;
  for (int iter = 0; iter < 200; ++iter) {
    mid = 0.5 * (lo + hi);
    const double f = rd(mid) - target_rd;
    if (std::abs(f) <= tol) return mid;
    (f < 0.0 ? lo : hi) = mid;
  }
  return mid;
}

std::string MethodSpec::label() const {
  if (kind == Kind::bond) return "bond";
  if (baseline.method == BaselineMethod::fixed_lambda) {
    std::string s = std::to_string(baseline.lambda_fixed);
    s.erase(s.find_last_not_of('0') + 1);
    if (!s.empty() && s.back() == '.') s.pop_back();
    return "fixed_lambda_" + s;
  }
  return baseline_name(baseline.method);
}

namespace {

struct RepOutcome {
  std::vector<std::uint8_t> reject;  // per method
  std::array<double, 4> bond_stats{0, 0, 0, 0};  // lambda0, lambda1, w0, w1
  bool has_bond = false;
};

}  // namespace

OCResult run_oc(const OCConfig& config) {
  if (config.reps_null < 100 || config.reps_alt < 100)
    throw std::invalid_argument("run_oc: need at least 100 replications per phase");
  if (config.methods.empty()) throw std::invalid_argument("run_oc: no methods");
  if (config.gammas.empty()) throw std::invalid_argument("run_oc: empty gamma grid");

  OCResult result;
  result.config = config;
  result.cells.assign(config.gammas.size(),
                      std::vector<OCCell>(config.methods.size()));

  const std::uint64_t kind_id = (config.kind == OutcomeKind::binary) ? 1 : 0;

  // Link-scale effects per phase (shared across gammas: the current-trial
  // marginal effect does not depend on gamma).
  double theta_null = 0.0, theta_alt = config.theta1;
  if (config.kind == OutcomeKind::binary) {
    ScenarioConfig base = ScenarioConfig::make(config.scenario, config.kind, 0.0);
    const std::uint64_t cal_seed =
        derive_seed(config.master_seed, {scenario_id(config.scenario), kind_id, 777});
    theta_null = calibrate_binary_theta(base, 0.0, 1000000, 1e-4, cal_seed);
    theta_alt = calibrate_binary_theta(base, config.theta1, 1000000, 1e-4, cal_seed);
  }

  for (std::size_t g = 0; g < config.gammas.size(); ++g) {
    ScenarioConfig cfg_null =
        ScenarioConfig::make(config.scenario, config.kind, config.gammas[g]);
    cfg_null.theta = theta_null;
    ScenarioConfig cfg_alt = cfg_null;
    cfg_alt.theta = theta_alt;

    // Oracle radii from the null configuration's analytic means.
    RadiusSpec oracle;
    oracle.rho.resize(1);
    oracle.rho[0][0] = std::abs(cfg_null.true_mean(true, 0) - cfg_null.true_mean(false, 0));
    if (cfg_null.historical_has_treatment)
      oracle.rho[0][1] =
          std::abs(cfg_null.true_mean(true, 1) - cfg_null.true_mean(false, 1));

    BorrowConfig bond_cfg;
    bond_cfg.alpha = config.alpha;
    bond_cfg.theta1 = config.theta1;
    bond_cfg.lambda_cap = config.lambda_cap;
    bond_cfg.grid_points = config.grid_points;

    double bond_sum[4] = {0, 0, 0, 0};
    std::size_t bond_n = 0;

    for (int phase = 0; phase < 2; ++phase) {
      const ScenarioConfig& cfg = phase == 0 ? cfg_null : cfg_alt;
      const int reps = phase == 0 ? config.reps_null : config.reps_alt;
      std::vector<RepOutcome> outcomes(reps);

      auto run_rep = [&](int r) {
        RepOutcome& out = outcomes[r];
        out.reject.resize(config.methods.size());
        const std::uint64_t seed = derive_seed(
            config.master_seed, {scenario_id(config.scenario), kind_id,
                                 static_cast<std::uint64_t>(g),
                                 static_cast<std::uint64_t>(phase),
                                 static_cast<std::uint64_t>(r)});
        TrialData data = generate_trial(cfg, seed);
        RadiusSpec radii;
        bool have_radii = false;
        for (std::size_t m = 0; m < config.methods.size(); ++m) {
          const MethodSpec& method = config.methods[m];
          if (method.kind == MethodSpec::Kind::bond) {
            if (!have_radii) {
              radii = (config.radius.kind == RadiusPolicy::Kind::oracle)
                          ? oracle
                          : estimate_radii(data.current, data.historical,
                                           config.radius.c);
              have_radii = true;
            }
            BondRun run = run_bond(data.layout, radii, bond_cfg);
            out.reject[m] = run.test.reject ? 1 : 0;
            out.bond_stats = {run.calibration.lambda_hat.at(0, 0),
                              run.calibration.lambda_hat.at(0, 1),
                              run.calibration.weights.historical.empty()
                                  ? 0.0
                                  : run.calibration.weights.historical[0][0],
                              run.calibration.weights.historical.empty()
                                  ? 0.0
                                  : run.calibration.weights.historical[0][1]};
            out.has_bond = true;
          } else {
            out.reject[m] =
                run_baseline(method.baseline, data.layout, config.alpha).reject ? 1 : 0;
          }
        }
      };

      const int workers = std::max(1, config.workers);
      if (workers == 1) {
        for (int r = 0; r < reps; ++r) run_rep(r);
      } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w) {
          pool.emplace_back([&, w] {
            for (int r = w; r < reps; r += workers) run_rep(r);
          });
        }
        for (auto& t : pool) t.join();
      }

      // Sequential reduction in replication order keeps results identical for
      // any worker count.
      std::vector<int> counts(config.methods.size(), 0);
      for (int r = 0; r < reps; ++r) {
        for (std::size_t m = 0; m < config.methods.size(); ++m)
          counts[m] += outcomes[r].reject[m];
        if (outcomes[r].has_bond) {
          for (int i = 0; i < 4; ++i) bond_sum[i] += outcomes[r].bond_stats[i];
          ++bond_n;
        }
      }
      for (std::size_t m = 0; m < config.methods.size(); ++m) {
        OCCell& cell = result.cells[g][m];
        const double rate = static_cast<double>(counts[m]) / reps;
        const double se = std::sqrt(rate * (1.0 - rate) / reps);
        if (phase == 0) {
          cell.type1 = rate;
          cell.type1_se = se;
          cell.reps_null = reps;
        } else {
          cell.power = rate;
          cell.power_se = se;
          cell.reps_alt = reps;
        }
      }
    }

    if (bond_n > 0) {
      for (std::size_t m = 0; m < config.methods.size(); ++m) {
        if (config.methods[m].kind != MethodSpec::Kind::bond) continue;
        OCCell& cell = result.cells[g][m];
        cell.mean_lambda0 = bond_sum[0] / bond_n;
        cell.mean_lambda1 = bond_sum[1] / bond_n;
        cell.mean_w0 = bond_sum[2] / bond_n;
        cell.mean_w1 = bond_sum[3] / bond_n;
      }
    }
  }
  return result;
}

std::vector<WorstCase> worst_case_summary(const OCResult& result) {
  std::vector<WorstCase> out;
  for (std::size_t m = 0; m < result.config.methods.size(); ++m) {
    WorstCase wc;
    wc.method = result.config.methods[m].label();
    for (std::size_t g = 0; g < result.config.gammas.size(); ++g) {
      const OCCell& cell = result.cells[g][m];
      if (cell.type1 > wc.max_type1) {
        wc.max_type1 = cell.type1;
        wc.gamma_at_max_type1 = result.config.gammas[g];
      }
      if (cell.power < wc.min_power) {
        wc.min_power = cell.power;
        wc.gamma_at_min_power = result.config.gammas[g];
      }
    }
    out.push_back(wc);
  }
  return out;
}

}  // namespace sim
}  // namespace bond
