#include "bond/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "bond/normal.hpp"

namespace bond {
namespace io {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(int line, const std::string& where, const std::string& msg) {
  std::ostringstream os;
  os << "line " << line << ": ";
  if (!where.empty()) os << "[" << where << "] ";
  os << msg;
  throw std::invalid_argument(os.str());
}

double parse_real(const std::string& v, int line, const std::string& where,
                  const std::string& key) {
  try {
    std::size_t pos = 0;
    double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return x;
  } catch (...) {
    fail(line, where, key + ": expected a number, got '" + v + "'");
  }
}

long parse_int(const std::string& v, int line, const std::string& where,
               const std::string& key) {
  try {
    std::size_t pos = 0;
    long x = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return x;
  } catch (...) {
    fail(line, where, key + ": expected an integer, got '" + v + "'");
  }
}

struct CellDraft {
  std::optional<long> n;
  std::optional<double> mean, variance;
  std::vector<double> samples;
  int line = 0;
};

int arm_of(const std::string& name, int line, const std::string& where) {
  if (name == "control") return 0;
  if (name == "treatment") return 1;
  fail(line, where, "expected arm 'control' or 'treatment', got '" + name + "'");
}

std::string exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string num6(double v) {
  if (v == 0.0) return "0";  // avoid "-0"
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

AnalysisInput parse_analysis_input(const std::string& text) {
  std::map<std::string, std::pair<std::string, int>> top;  // key -> (value, line)
  std::map<std::string, CellDraft> cells;                  // "current.control", "historical.1.control", ...
  std::map<std::string, std::pair<std::string, int>> radius_keys;

  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = raw;
    if (auto pos = s.find('#'); pos != std::string::npos) s.erase(pos);
    s = trim(s);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') fail(line, "", "unterminated section header");
      section = trim(s.substr(1, s.size() - 2));
      if (section.empty()) fail(line, "", "empty section name");
      continue;
    }
    auto eq = s.find('=');
    if (eq == std::string::npos) fail(line, section, "expected 'key = value'");
    std::string key = trim(s.substr(0, eq));
    std::string value = trim(s.substr(eq + 1));
    if (key.empty()) fail(line, section, "empty key");

    if (section.empty()) {
      if (top.count(key)) fail(line, "", "duplicate key '" + key + "'");
      top[key] = {value, line};
    } else if (section == "radius") {
      if (radius_keys.count(key)) fail(line, section, "duplicate key '" + key + "'");
      radius_keys[key] = {value, line};
    } else {
      CellDraft& cell = cells[section];
      cell.line = line;
      if (key == "n") cell.n = parse_int(value, line, section, key);
      else if (key == "mean") cell.mean = parse_real(value, line, section, key);
      else if (key == "variance") cell.variance = parse_real(value, line, section, key);
      else if (key == "samples") {
        std::istringstream vs(value);
        std::string tok;
        while (vs >> tok) cell.samples.push_back(parse_real(tok, line, section, key));
        if (cell.samples.empty()) fail(line, section, "samples: empty list");
      } else {
        fail(line, section, "unknown key '" + key + "'");
      }
    }
  }

  AnalysisInput input;

  auto take = [&](const std::string& key) -> std::optional<std::pair<std::string, int>> {
    auto it = top.find(key);
    if (it == top.end()) return std::nullopt;
    auto v = it->second;
    top.erase(it);
    return v;
  };

  auto outcome = take("outcome");
  if (!outcome) throw std::invalid_argument("missing top-level key 'outcome'");
  if (outcome->first == "continuous") input.layout.kind = OutcomeKind::continuous;
  else if (outcome->first == "binary") input.layout.kind = OutcomeKind::binary;
  else fail(outcome->second, "", "outcome: expected 'continuous' or 'binary'");

  if (auto v = take("alpha")) input.config.alpha = parse_real(v->first, v->second, "", "alpha");
  if (auto v = take("theta1")) input.config.theta1 = parse_real(v->first, v->second, "", "theta1");
  if (auto v = take("lambda_cap"))
    input.config.lambda_cap = parse_real(v->first, v->second, "", "lambda_cap");
  if (auto v = take("grid_points"))
    input.config.grid_points = static_cast<int>(parse_int(v->first, v->second, "", "grid_points"));
  if (auto v = take("ridge")) input.config.ridge = parse_real(v->first, v->second, "", "ridge");
  if (auto v = take("correction")) {
    if (v->first == "plugin") input.config.correction = CorrectionMode::plug_in;
    else if (v->first == "oracle") input.config.correction = CorrectionMode::oracle;
    else if (v->first == "universal") input.config.correction = CorrectionMode::universal;
    else fail(v->second, "", "correction: expected plugin, oracle, or universal");
  }
  if (auto v = take("mu_true_control"))
    input.oracle_centers.mu[0] = parse_real(v->first, v->second, "", "mu_true_control");
  if (auto v = take("mu_true_treatment"))
    input.oracle_centers.mu[1] = parse_real(v->first, v->second, "", "mu_true_treatment");
  if (!top.empty()) {
    const auto& [key, v] = *top.begin();
    fail(v.second, "", "unknown top-level key '" + key + "'");
  }

  // Materialize cells into the layout.
  std::size_t n_sources = 0;
  auto build_cell = [&](const std::string& name, const CellDraft& draft) -> ArmSummary {
    ArmSummary from_samples;
    if (!draft.samples.empty()) {
      try {
        from_samples = summarize(draft.samples, input.layout.kind);
      } catch (const std::exception& e) {
        fail(draft.line, name, e.what());
      }
      if (draft.n && static_cast<std::size_t>(*draft.n) != from_samples.n)
        fail(draft.line, name, "n disagrees with the sample count");
      if (draft.mean && from_samples.mean &&
          std::abs(*draft.mean - *from_samples.mean) > 1e-6)
        fail(draft.line, name, "mean disagrees with the sample mean");
      if (draft.variance && from_samples.variance &&
          std::abs(*draft.variance - *from_samples.variance) > 1e-6)
        fail(draft.line, name, "variance disagrees with the sample variance");
      return from_samples;
    }
    if (!draft.n) fail(draft.line, name, "n missing");
    if (*draft.n < 0) fail(draft.line, name, "n must be >= 0");
    const std::size_t n = static_cast<std::size_t>(*draft.n);
    if (n >= 1 && !draft.mean) fail(draft.line, name, "mean missing");
    if (n < 2) return ArmSummary::from_moments(n, draft.mean.value_or(0.0));
    if (input.layout.kind == OutcomeKind::binary) {
      if (draft.variance) {
        ArmSummary s = ArmSummary::from_moments(n, *draft.mean, *draft.variance);
        return s;
      }
      try {
        return ArmSummary::binary_rate(n, *draft.mean);
      } catch (const std::exception& e) {
        fail(draft.line, name, e.what());
      }
    }
    if (!draft.variance)
      fail(draft.line, name, "variance missing (continuous cell with n >= 2)");
    return ArmSummary::from_moments(n, *draft.mean, *draft.variance);
  };

  bool saw_current[2] = {false, false};
  for (const auto& [name, draft] : cells) {
    std::istringstream ns(name);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ns, part, '.')) parts.push_back(part);
    if (parts.size() == 2 && parts[0] == "current") {
      const int arm = arm_of(parts[1], draft.line, name);
      input.layout.current[arm] = build_cell(name, draft);
      if (!draft.samples.empty()) input.current_samples[arm] = draft.samples;
      saw_current[arm] = true;
    } else if (parts.size() == 3 && parts[0] == "historical") {
      long src = parse_int(parts[1], draft.line, name, "source index");
      if (src < 1) fail(draft.line, name, "source index must be >= 1");
      const int arm = arm_of(parts[2], draft.line, name);
      const std::size_t k = static_cast<std::size_t>(src - 1);
      n_sources = std::max(n_sources, k + 1);
      if (input.layout.historical.size() < n_sources)
        input.layout.historical.resize(n_sources);
      if (input.historical_samples.size() < n_sources)
        input.historical_samples.resize(n_sources);
      ArmSummary cell = build_cell(name, draft);
      if (cell.n >= 1) input.layout.historical[k][arm] = cell;
      if (!draft.samples.empty()) input.historical_samples[k][arm] = draft.samples;
    } else {
      fail(draft.line, name,
           "unknown section (expected current.<arm>, historical.<k>.<arm>, or radius)");
    }
  }
  if (!saw_current[0]) throw std::invalid_argument("missing section [current.control]");
  if (!saw_current[1]) throw std::invalid_argument("missing section [current.treatment]");

  {
    auto errs = validate_layout(input.layout);
    if (!errs.empty()) {
      std::string msg = "invalid layout:";
      for (const auto& e : errs) msg += "\n  " + e;
      throw std::invalid_argument(msg);
    }
  }

  // Radius resolution.
  std::string policy = "fixed";
  double c_mult = 1.5;
  if (auto it = radius_keys.find("policy"); it != radius_keys.end()) {
    policy = it->second.first;
    if (policy != "fixed" && policy != "data")
      fail(it->second.second, "radius", "policy: expected 'fixed' or 'data'");
    radius_keys.erase(it);
  }
  if (auto it = radius_keys.find("c"); it != radius_keys.end()) {
    c_mult = parse_real(it->second.first, it->second.second, "radius", "c");
    radius_keys.erase(it);
  }

  if (policy == "data") {
    if (!radius_keys.empty())
      fail(radius_keys.begin()->second.second, "radius",
           "fixed radii cannot be combined with the data policy");
    try {
      input.radii = estimate_radii(input.current_samples, input.historical_samples, c_mult);
    } catch (const std::exception& e) {
      throw std::invalid_argument(std::string("[radius] ") + e.what());
    }
  } else {
    input.radii.origin = RadiusSpec::Origin::fixed;
    input.radii.rho.resize(input.layout.historical.size());
    for (const auto& [key, v] : radius_keys) {
      std::istringstream ks(key);
      std::string part;
      std::vector<std::string> parts;
      while (std::getline(ks, part, '.')) parts.push_back(part);
      std::size_t src = 0;
      std::string arm_name;
      if (parts.size() == 1) {
        arm_name = parts[0];
      } else if (parts.size() == 2) {
        long s = parse_int(parts[0], v.second, "radius", "source index");
        if (s < 1) fail(v.second, "radius", "source index must be >= 1");
        src = static_cast<std::size_t>(s - 1);
        arm_name = parts[1];
      } else {
        fail(v.second, "radius", "unknown key '" + key + "'");
      }
      const int arm = arm_of(arm_name, v.second, "radius");
      const double rho = parse_real(v.first, v.second, "radius", key);
      if (rho < 0.0) fail(v.second, "radius", key + ": radius must be >= 0");
      if (src >= input.layout.historical.size() ||
          !input.layout.historical_cell(src, arm))
        fail(v.second, "radius", key + ": no matching historical cell");
      input.radii.rho[src][arm] = rho;
    }
    // Unspecified cells default to radius 0.
    for (std::size_t k = 0; k < input.layout.historical.size(); ++k)
      for (const auto& [arm, cell] : input.layout.historical[k])
        if (!input.radii.find(k, arm)) input.radii.rho[k][arm] = 0.0;
  }

  return input;
}

AnalysisInput load_analysis_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("cannot open input file: " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return parse_analysis_input(os.str());
}

std::string emit_analysis_input(const AnalysisInput& input) {
  std::ostringstream os;
  os << "outcome = "
     << (input.layout.kind == OutcomeKind::binary ? "binary" : "continuous") << "\n";
  os << "alpha = " << exact(input.config.alpha) << "\n";
  if (std::isfinite(input.config.theta1))
    os << "theta1 = " << exact(input.config.theta1) << "\n";
  os << "lambda_cap = " << exact(input.config.lambda_cap) << "\n";
  os << "grid_points = " << input.config.grid_points << "\n";
  os << "ridge = " << exact(input.config.ridge) << "\n";
  os << "correction = "
     << (input.config.correction == CorrectionMode::plug_in   ? "plugin"
         : input.config.correction == CorrectionMode::oracle ? "oracle"
                                                             : "universal")
     << "\n";
  if (input.oracle_centers.mu[0])
    os << "mu_true_control = " << exact(*input.oracle_centers.mu[0]) << "\n";
  if (input.oracle_centers.mu[1])
    os << "mu_true_treatment = " << exact(*input.oracle_centers.mu[1]) << "\n";

  auto emit_cell = [&](const std::string& name, const ArmSummary& cell,
                       const std::vector<double>* samples) {
    os << "\n[" << name << "]\n";
    if (samples && !samples->empty()) {
      os << "samples =";
      for (double v : *samples) os << " " << exact(v);
      os << "\n";
      return;
    }
    os << "n = " << cell.n << "\n";
    if (cell.mean) os << "mean = " << exact(*cell.mean) << "\n";
    if (cell.variance) os << "variance = " << exact(*cell.variance) << "\n";
  };

  static const char* arm_name[2] = {"control", "treatment"};
  for (int a = 0; a < 2; ++a) {
    auto it = input.current_samples.find(a);
    emit_cell(std::string("current.") + arm_name[a], input.layout.current[a],
              it != input.current_samples.end() ? &it->second : nullptr);
  }
  for (std::size_t k = 0; k < input.layout.historical.size(); ++k) {
    for (const auto& [arm, cell] : input.layout.historical[k]) {
      const std::vector<double>* samples = nullptr;
      if (k < input.historical_samples.size()) {
        auto it = input.historical_samples[k].find(arm);
        if (it != input.historical_samples[k].end()) samples = &it->second;
      }
      emit_cell("historical." + std::to_string(k + 1) + "." + arm_name[arm], cell,
                samples);
    }
  }

  os << "\n[radius]\n";
  if (input.radii.origin == RadiusSpec::Origin::data_driven) {
    os << "policy = data\n";
    os << "c = " << exact(input.radii.inflation) << "\n";
  } else {
    os << "policy = fixed\n";
    for (std::size_t k = 0; k < input.radii.rho.size(); ++k)
      for (const auto& [arm, rho] : input.radii.rho[k])
        os << k + 1 << "." << arm_name[arm] << " = " << exact(rho) << "\n";
  }
  return os.str();
}

namespace {

std::string opt6(const std::optional<double>& v) { return v ? num6(*v) : ""; }

double arm_lambda_eff(const WeightProfile& weights, const TrialLayout& layout, int arm) {
  const double w = weights.historical_total(arm);
  const std::size_t n_h = layout.historical_n(arm);
  if (w <= 0.0 || n_h == 0) return 0.0;
  return weight_inverse(w, layout.current[arm].n, n_h);
}

}  // namespace

ReportRecord make_bond_record(const BondRun& run, const TrialLayout& layout,
                              const RadiusSpec& radii, double s_current_only) {
  ReportRecord rec;
  rec.method = "bond";
  if (const double* r = radii.find(0, 0)) rec.rho0 = *r;
  if (const double* r = radii.find(0, 1)) rec.rho1 = *r;
  rec.lambda0 = arm_lambda_eff(run.calibration.weights, layout, 0);
  rec.lambda1 = arm_lambda_eff(run.calibration.weights, layout, 1);
  rec.w0 = run.calibration.weights.historical_total(0);
  rec.w1 = run.calibration.weights.historical_total(1);
  rec.n_eff0 = rec.lambda0 * static_cast<double>(layout.historical_n(0));
  rec.n_eff1 = rec.lambda1 * static_cast<double>(layout.historical_n(1));
  rec.mu0_hat = estimate_mean(run.calibration.lambda_hat, layout, 0);
  rec.mu1_hat = estimate_mean(run.calibration.lambda_hat, layout, 1);
  rec.theta_hat = run.test.theta_hat;
  rec.s_hat = run.test.s_hat;
  rec.b_plus = run.test.corrections.plus;
  rec.b_minus = run.test.corrections.minus;
  rec.statistic = run.test.statistic_upper;
  rec.p = run.test.p_one_sided;
  rec.reject = run.test.reject;
  rec.ci_lower = run.test.ci_lower;
  rec.ci_upper = run.test.ci_upper;
  if (s_current_only > 0.0) rec.width_ratio = run.test.s_hat / s_current_only;
  rec.kappa = run.calibration.kappa_hat;
  rec.power_proxy = run.calibration.robust_power_proxy;
  return rec;
}

ReportRecord make_baseline_record(const BaselineResult& result, double s_current_only) {
  ReportRecord rec;
  rec.method = baseline_name(result.spec.method);
  if (result.spec.method == BaselineMethod::fixed_lambda ||
      result.spec.method == BaselineMethod::power_prior)
    rec.method += "_" + num6(result.spec.lambda_fixed);
  rec.lambda0 = result.arms[0].lambda_eff;
  rec.lambda1 = result.arms[1].lambda_eff;
  rec.w0 = result.arms[0].w_hist;
  rec.w1 = result.arms[1].w_hist;
  rec.n_eff0 = result.arms[0].eff_borrowed;
  rec.n_eff1 = result.arms[1].eff_borrowed;
  rec.mu0_hat = result.arms[0].mu_hat;
  rec.mu1_hat = result.arms[1].mu_hat;
  rec.theta_hat = result.theta_hat;
  rec.s_hat = result.sd;
  rec.statistic = result.statistic;
  rec.p = result.p_one_sided;
  rec.reject = result.reject;
  const double z = normal_quantile(1.0 - result.alpha / 2.0);
  rec.ci_lower = result.theta_hat - z * result.sd;
  rec.ci_upper = result.theta_hat + z * result.sd;
  if (s_current_only > 0.0) rec.width_ratio = result.sd / s_current_only;
  return rec;
}

std::string report_header() {
  return "method,rho0,rho1,lambda0,lambda1,w0,w1,n_eff0,n_eff1,mu0_hat,mu1_hat,"
         "theta_hat,s_hat,b_plus,b_minus,statistic,p,reject,ci_lower,ci_upper,"
         "width_ratio,kappa,power_proxy";
}

std::string format_record(const ReportRecord& r) {
  std::ostringstream os;
  os << r.method << ',' << opt6(r.rho0) << ',' << opt6(r.rho1) << ',' << num6(r.lambda0)
     << ',' << num6(r.lambda1) << ',' << num6(r.w0) << ',' << num6(r.w1) << ','
     << num6(r.n_eff0) << ',' << num6(r.n_eff1) << ',' << num6(r.mu0_hat) << ','
     << num6(r.mu1_hat) << ',' << num6(r.theta_hat) << ',' << num6(r.s_hat) << ','
     << num6(r.b_plus) << ',' << num6(r.b_minus) << ',' << num6(r.statistic) << ','
     << num6(r.p) << ',' << (r.reject ? 1 : 0) << ',' << num6(r.ci_lower) << ','
     << num6(r.ci_upper) << ',' << opt6(r.width_ratio) << ',' << opt6(r.kappa) << ','
     << opt6(r.power_proxy);
  return os.str();
}

std::string format_report(const std::vector<ReportRecord>& records) {
  std::string out = report_header() + "\n";
  for (const auto& r : records) out += format_record(r) + "\n";
  return out;
}

std::string oc_report_header() {
  return "scenario,outcome,radius_policy,gamma,method,reps_null,type1,type1_se,"
         "reps_alt,power,power_se,mean_lambda0,mean_lambda1,mean_w0,mean_w1";
}

std::string format_oc_report(const sim::OCResult& result) {
  std::ostringstream os;
  os << oc_report_header() << "\n";
  const auto& cfg = result.config;
  const std::string policy =
      cfg.radius.kind == sim::RadiusPolicy::Kind::oracle
          ? "oracle"
          : "data_c" + num6(cfg.radius.c);
  for (std::size_t g = 0; g < cfg.gammas.size(); ++g) {
    for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
      const sim::OCCell& cell = result.cells[g][m];
      os << sim::scenario_name(cfg.scenario) << ','
         << (cfg.kind == OutcomeKind::binary ? "binary" : "continuous") << ','
         << policy << ',' << num6(cfg.gammas[g]) << ',' << cfg.methods[m].label()
         << ',' << cell.reps_null << ',' << num6(cell.type1) << ','
         << num6(cell.type1_se) << ',' << cell.reps_alt << ',' << num6(cell.power)
         << ',' << num6(cell.power_se) << ',' << num6(cell.mean_lambda0) << ','
         << num6(cell.mean_lambda1) << ',' << num6(cell.mean_w0) << ','
         << num6(cell.mean_w1) << "\n";
    }
  }
  return os.str();
}

}  // namespace io
}  // namespace bond
