#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bond/calibrate.hpp"
#include "bond/baselines.hpp"
#include "bond/sim.hpp"

namespace bond {
namespace io {

// Parsed analysis input: summaries, resolved radii, run configuration, and
// any raw sample arrays (kept for data-driven radii).
struct AnalysisInput {
  TrialLayout layout;
  BorrowConfig config;
  RadiusSpec radii;
  Centers oracle_centers;
  std::map<int, std::vector<double>> current_samples;
  std::vector<std::map<int, std::vector<double>>> historical_samples;
};

// Parses the key-value analysis document. Throws std::invalid_argument with a
// line- and field-addressed message on the first invalid construct.
AnalysisInput parse_analysis_input(const std::string& text);
AnalysisInput load_analysis_file(const std::string& path);

// Canonical serialization; parse(emit(parse(x))) reproduces the same
// in-memory configuration.
std::string emit_analysis_input(const AnalysisInput& input);

struct ReportRecord {
  std::string method;
  std::optional<double> rho0, rho1;
  double lambda0 = 0.0, lambda1 = 0.0;
  double w0 = 0.0, w1 = 0.0;
  double n_eff0 = 0.0, n_eff1 = 0.0;
  double mu0_hat = 0.0, mu1_hat = 0.0;
  double theta_hat = 0.0, s_hat = 0.0;
  double b_plus = 0.0, b_minus = 0.0;
  double statistic = 0.0, p = 1.0;
  bool reject = false;
  double ci_lower = 0.0, ci_upper = 0.0;
  std::optional<double> width_ratio, kappa, power_proxy;
};

ReportRecord make_bond_record(const BondRun& run, const TrialLayout& layout,
                              const RadiusSpec& radii, double s_current_only);
ReportRecord make_baseline_record(const BaselineResult& result, double s_current_only);

std::string report_header();
std::string format_record(const ReportRecord& record);
std::string format_report(const std::vector<ReportRecord>& records);

std::string oc_report_header();
std::string format_oc_report(const sim::OCResult& result);

// Numeric rendering used throughout the reports: 6 significant digits.
std::string num6(double v);

}  // namespace io
}  // namespace bond
