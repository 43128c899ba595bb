#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bond/baselines.hpp"
#include "bond/calibrate.hpp"

namespace bond {
namespace sim {

enum class Scenario { commensurate, covshift_effectmod, control_drift };

std::string scenario_name(Scenario s);

// One simulated configuration: covariate-shift vector, effect modification,
// arm drifts, and noise are pinned by the scenario and the heterogeneity
// index gamma; theta is the link-scale main treatment effect.
struct ScenarioConfig {
  Scenario scenario = Scenario::commensurate;
  OutcomeKind kind = OutcomeKind::continuous;
  double gamma = 0.0;
  std::size_t n_current = 200;
  std::size_t n_historical = 500;
  double allocation = 0.5;
  double beta0 = 0.0;
  std::array<double, 2> beta{0.5, 0.5};
  std::array<double, 2> effect_mod{0.0, 0.0};  // eta
  std::array<double, 2> cov_shift{0.0, 0.0};   // gamma * m
  double drift0 = 0.0, drift1 = 0.0;           // u_{H,a}
  double sigma = 1.0;
  double theta = 0.0;
  bool historical_has_treatment = true;

  static ScenarioConfig make(Scenario s, OutcomeKind kind, double gamma);

  // Analytic outcome moments. Binary means fall back to a cached
  // high-precision Monte Carlo integral of expit over the covariate law.
  double true_mean(bool historical, int arm) const;
  double true_variance_continuous(int arm) const;
};

struct TrialData {
  std::map<int, std::vector<double>> current;
  std::vector<std::map<int, std::vector<double>>> historical;
  TrialLayout layout;
};

// Deterministic given (config, seed); same seed, same data bit-for-bit.
TrialData generate_trial(const ScenarioConfig& config, std::uint64_t seed);

// Link-scale offset theta producing the target marginal risk difference for
// binary outcomes (bisection under common random numbers).
double calibrate_binary_theta(const ScenarioConfig& config, double target_rd,
                              std::size_t mc_draws, double tol, std::uint64_t seed);

struct RadiusPolicy {
  enum class Kind { oracle, data_driven } kind = Kind::data_driven;
  double c = 1.5;
};

struct MethodSpec {
  enum class Kind { bond, baseline } kind = Kind::bond;
  BaselineSpec baseline;
  std::string label() const;
};

struct OCConfig {
  Scenario scenario = Scenario::commensurate;
  OutcomeKind kind = OutcomeKind::continuous;
  std::vector<double> gammas{0.0, 0.5, 1.0, 1.5, 2.0};
  std::vector<MethodSpec> methods;
  int reps_null = 4000;
  int reps_alt = 2000;
  std::uint64_t master_seed = 1;
  RadiusPolicy radius;
  double alpha = 0.025;
  double theta1 = 0.3;
  int grid_points = 41;
  double lambda_cap = 1.0;
  int workers = 1;  // any value yields identical results
};

struct OCCell {
  double type1 = 0.0, type1_se = 0.0;
  double power = 0.0, power_se = 0.0;
  int reps_null = 0, reps_alt = 0;
  // Mean selected borrowing (BOND methods only), pooled over both phases.
  double mean_lambda0 = 0.0, mean_lambda1 = 0.0;
  double mean_w0 = 0.0, mean_w1 = 0.0;
};

struct OCResult {
  OCConfig config;
  // cells[gamma_index][method_index]
  std::vector<std::vector<OCCell>> cells;
};

OCResult run_oc(const OCConfig& config);

struct WorstCase {
  std::string method;
  double max_type1 = 0.0;
  double gamma_at_max_type1 = 0.0;
  double min_power = 1.0;
  double gamma_at_min_power = 0.0;
};

std::vector<WorstCase> worst_case_summary(const OCResult& result);

}  // namespace sim
}  // namespace bond
