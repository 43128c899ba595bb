#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bond/io.hpp"
#include "bond/normal.hpp"

namespace {

using namespace bond;

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

void write_output(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(out_path, std::ios::binary);
  if (!f) throw std::invalid_argument("cannot open output file: " + out_path);
  f << text;
}

std::vector<double> parse_grid(const std::string& csv, const char* what) {
  std::vector<double> out;
  std::istringstream in(csv);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    try {
      out.push_back(std::stod(tok));
    } catch (...) {
      throw std::invalid_argument(std::string(what) + ": bad number '" + tok + "'");
    }
  }
  if (out.empty()) throw std::invalid_argument(std::string(what) + ": empty list");
  return out;
}

BaselineSpec parse_baseline(const std::string& name) {
  std::string method = name;
  std::optional<double> param;
  if (auto pos = name.find(':'); pos != std::string::npos) {
    method = name.substr(0, pos);
    try {
      param = std::stod(name.substr(pos + 1));
    } catch (...) {
      throw std::invalid_argument("method '" + name + "': bad parameter");
    }
  }
  BaselineSpec spec;
  if (method == "current_only") spec.method = BaselineMethod::current_only;
  else if (method == "naive_pool") spec.method = BaselineMethod::naive_pool;
  else if (method == "fixed") {
    spec.method = BaselineMethod::fixed_lambda;
    spec.lambda_fixed = param.value_or(0.5);
  } else if (method == "ttp") {
    spec.method = BaselineMethod::ttp;
    if (param) spec.alpha_pool = *param;
  } else if (method == "power_prior") {
    spec.method = BaselineMethod::power_prior;
    spec.lambda_fixed = param.value_or(0.5);
  } else if (method == "commensurate") {
    spec.method = BaselineMethod::commensurate;
    if (param) spec.tau = *param;
  } else if (method == "robust_map") {
    spec.method = BaselineMethod::robust_map;
    if (param) spec.epsilon = *param;
  } else if (method == "elastic") {
    spec.method = BaselineMethod::elastic;
    if (param) spec.elastic_scale = *param;
  } else if (method == "uip") {
    spec.method = BaselineMethod::uip;
    if (param) spec.uip_m = *param;
  } else if (method == "mem") {
    spec.method = BaselineMethod::mem;
    if (param) spec.mem_inclusion = *param;
  } else {
    throw std::invalid_argument("unknown method '" + name + "'");
  }
  return spec;
}

struct ConfigFlags {
  std::optional<double> alpha, theta1, ridge, cap;
  std::optional<int> grid_points;
  std::string correction;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--alpha", alpha, "significance level");
    cmd->add_option("--theta1", theta1, "target alternative effect");
    cmd->add_option("--grid-points", grid_points, "grid points per lambda axis");
    cmd->add_option("--ridge", ridge, "ridge stabilizer");
    cmd->add_option("--lambda-cap", cap, "borrowing cap per coordinate");
    cmd->add_option("--correction", correction, "plugin|oracle|universal");
  }

  void apply(BorrowConfig& config) const {
    if (alpha) config.alpha = *alpha;
    if (theta1) config.theta1 = *theta1;
    if (grid_points) config.grid_points = *grid_points;
    if (ridge) config.ridge = *ridge;
    if (cap) config.lambda_cap = *cap;
    if (correction == "plugin") config.correction = CorrectionMode::plug_in;
    else if (correction == "oracle") config.correction = CorrectionMode::oracle;
    else if (correction == "universal") config.correction = CorrectionMode::universal;
    else if (!correction.empty())
      throw std::invalid_argument("--correction: expected plugin, oracle, or universal");
  }
};

double current_only_s(const io::AnalysisInput& input) {
  return effect_dispersion(BorrowParams::none(), input.layout).s;
}

io::ReportRecord fixed_lambda_record(const io::AnalysisInput& input, double lambda,
                                     double s0) {
  BorrowParams params;
  params.lambda.resize(input.layout.historical.size());
  for (std::size_t k = 0; k < input.layout.historical.size(); ++k)
    for (const auto& [arm, cell] : input.layout.historical[k])
      if (cell.n >= 2) params.lambda[k][arm] = lambda;
  BondRun run;
  run.test = test_one_sided(input.layout, params, input.radii, input.config.alpha,
                            input.config.correction,
                            input.config.correction == CorrectionMode::oracle
                                ? &input.oracle_centers
                                : nullptr);
  run.calibration.lambda_hat = params;
  run.calibration.weights = weight_profile(params, input.layout);
  run.calibration.kappa_hat =
      kappa_hat(params, input.layout, input.radii, input.config);
  run.calibration.robust_power_proxy =
      1.0 - normal_cdf(normal_quantile(1.0 - input.config.alpha) -
                       run.calibration.kappa_hat);
  io::ReportRecord rec = io::make_bond_record(run, input.layout, input.radii, s0);
  rec.method = "robust_lambda";
  return rec;
}

int cmd_test(const std::string& input_path, const ConfigFlags& flags,
             std::optional<double> lambda, const std::string& method,
             const std::string& surface_path, const std::string& out_path) {
  io::AnalysisInput input = io::load_analysis_file(input_path);
  flags.apply(input.config);
  const double s0 = current_only_s(input);

  std::vector<io::ReportRecord> records;
  if (lambda) {
    records.push_back(fixed_lambda_record(input, *lambda, s0));
  } else if (method.empty() || method == "bond") {
    BorrowConfig cfg = input.config;
    cfg.keep_surface = !surface_path.empty();
    BondRun run = run_bond(input.layout, input.radii, cfg);
    records.push_back(io::make_bond_record(run, input.layout, input.radii, s0));
    if (!surface_path.empty()) {
      std::ostringstream os;
      for (std::size_t d = 0; d < run.calibration.active.size(); ++d)
        os << "lambda_" << run.calibration.active[d].first + 1 << "_"
           << (run.calibration.active[d].second == 0 ? "control" : "treatment") << ",";
      os << "kappa\n";
      for (const auto& pt : run.calibration.surface) {
        for (double l : pt.lambda) os << io::num6(l) << ",";
        os << io::num6(pt.kappa) << "\n";
      }
      write_output(os.str(), surface_path);
    }
  } else {
    BaselineResult res =
        run_baseline(parse_baseline(method), input.layout, input.config.alpha);
    records.push_back(io::make_baseline_record(res, s0));
  }
  write_output(io::format_report(records), out_path);
  return 0;
}

int cmd_sensitivity(const std::string& input_path, const ConfigFlags& flags,
                    const std::string& rho_grid, const std::string& out_path) {
  io::AnalysisInput input = io::load_analysis_file(input_path);
  flags.apply(input.config);
  const double s0 = current_only_s(input);
  std::vector<io::ReportRecord> records;
  for (const auto& [rho, run] :
       sensitivity_sweep(input.layout, parse_grid(rho_grid, "--rho-grid"),
                         input.config)) {
    RadiusSpec radii;
    radii.rho.resize(input.layout.historical.size());
    for (std::size_t k = 0; k < input.layout.historical.size(); ++k)
      for (const auto& [arm, cell] : input.layout.historical[k])
        if (cell.n >= 1) radii.rho[k][arm] = rho;
    records.push_back(io::make_bond_record(run, input.layout, radii, s0));
  }
  write_output(io::format_report(records), out_path);
  return 0;
}

int cmd_simulate(const std::string& scenario, const std::string& outcome,
                 const std::string& gamma_grid, int reps_null, int reps_alt,
                 std::uint64_t seed, const std::string& radius,
                 const std::string& methods, int workers, const ConfigFlags& flags,
                 int grid_points, const std::string& out_path) {
  sim::OCConfig config;
  if (scenario == "commensurate") config.scenario = sim::Scenario::commensurate;
  else if (scenario == "covshift") config.scenario = sim::Scenario::covshift_effectmod;
  else if (scenario == "control_drift") config.scenario = sim::Scenario::control_drift;
  else
    throw std::invalid_argument(
        "--scenario: expected commensurate, covshift, or control_drift");

  if (outcome == "continuous") config.kind = OutcomeKind::continuous;
  else if (outcome == "binary") config.kind = OutcomeKind::binary;
  else throw std::invalid_argument("--outcome: expected continuous or binary");

  config.gammas = parse_grid(gamma_grid, "--gamma-grid");
  config.reps_null = reps_null;
  config.reps_alt = reps_alt;
  config.master_seed = seed;
  config.workers = workers;
  config.grid_points = grid_points;
  if (flags.alpha) config.alpha = *flags.alpha;
  if (flags.theta1) config.theta1 = *flags.theta1;
  if (flags.cap) config.lambda_cap = *flags.cap;

  if (radius == "oracle") {
    config.radius.kind = sim::RadiusPolicy::Kind::oracle;
  } else if (radius == "data" || radius.rfind("data:", 0) == 0) {
    config.radius.kind = sim::RadiusPolicy::Kind::data_driven;
    if (radius.size() > 5) config.radius.c = std::stod(radius.substr(5));
  } else {
    throw std::invalid_argument("--radius: expected oracle or data:<c>");
  }

  std::istringstream ms(methods);
  std::string tok;
  while (std::getline(ms, tok, ',')) {
    sim::MethodSpec m;
    if (tok == "bond") {
      m.kind = sim::MethodSpec::Kind::bond;
    } else {
      m.kind = sim::MethodSpec::Kind::baseline;
      m.baseline = parse_baseline(tok);
    }
    config.methods.push_back(m);
  }

  sim::OCResult result = sim::run_oc(config);
  std::ostringstream os;
  os << io::format_oc_report(result);
  os << "\nmethod,max_type1,gamma_at_max_type1,min_power,gamma_at_min_power\n";
  for (const auto& wc : sim::worst_case_summary(result))
    os << wc.method << ',' << io::num6(wc.max_type1) << ','
       << io::num6(wc.gamma_at_max_type1) << ',' << io::num6(wc.min_power) << ','
       << io::num6(wc.gamma_at_min_power) << "\n";
  write_output(os.str(), out_path);
  return 0;
}

int cmd_radius(const std::string& input_path, double c, const std::string& out_path) {
  io::AnalysisInput input = io::load_analysis_file(input_path);
  std::ostringstream os;
  os << "source,arm,n_current,n_historical,w1,rho_hat\n";
  for (std::size_t k = 0; k < input.historical_samples.size(); ++k) {
    for (const auto& [arm, hist] : input.historical_samples[k]) {
      auto it = input.current_samples.find(arm);
      if (it == input.current_samples.end())
        throw std::invalid_argument("radius: current arm " + std::to_string(arm) +
                                    " has no samples");
      const double w1 = w1_empirical(it->second, hist);
      os << k + 1 << ',' << (arm == 0 ? "control" : "treatment") << ','
         << it->second.size() << ',' << hist.size() << ',' << io::num6(w1) << ','
         << io::num6(c * w1) << "\n";
    }
  }
  write_output(os.str(), out_path);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "bond: distributionally robust borrowing of external trial data.\n"
      "Calibrates borrowing weights over Wasserstein ambiguity sets, runs the\n"
      "robust Wald test, classical borrowing baselines, radius sensitivity\n"
      "sweeps, and Monte Carlo operating characteristics."};
  app.require_subcommand(1);

  std::string input_path, out_path, surface_path, method, rho_grid;
  std::optional<double> lambda;
  ConfigFlags flags;

  CLI::App* test = app.add_subcommand("test", "analyze one trial layout");
  test->add_option("-i,--input", input_path, "analysis input file")->required();
  test->add_option("--lambda", lambda, "fixed borrowing parameter (skips calibration)");
  test->add_option("--method", method,
                   "bond (default) or a baseline: current_only, naive_pool, "
                   "fixed:<l>, ttp, power_prior:<l>, commensurate:<tau>, "
                   "robust_map:<eps>, elastic:<scale>, uip:<M>, mem:<incl>");
  test->add_option("--surface", surface_path, "write the kappa surface CSV here");
  test->add_option("-o,--out", out_path, "output path (default stdout)");
  flags.add_to(test);

  CLI::App* sens = app.add_subcommand("sensitivity", "sweep the ambiguity radius");
  sens->add_option("-i,--input", input_path, "analysis input file")->required();
  sens->add_option("--rho-grid", rho_grid, "comma-separated radii, ascending")
      ->required();
  sens->add_option("-o,--out", out_path, "output path (default stdout)");
  flags.add_to(sens);

  std::string scenario = "commensurate", outcome = "continuous";
  std::string gamma_grid = "0,0.5,1,1.5,2";
  std::string radius = "data:1.5", methods = "current_only,naive_pool,bond";
  int reps_null = 4000, reps_alt = 2000, workers = 1, sim_grid = 41;
  std::uint64_t seed = 1;

  CLI::App* simulate =
      app.add_subcommand("simulate", "Monte Carlo operating characteristics");
  simulate->add_option("--scenario", scenario, "commensurate|covshift|control_drift");
  simulate->add_option("--outcome", outcome, "continuous|binary");
  simulate->add_option("--gamma-grid", gamma_grid, "heterogeneity grid");
  simulate->add_option("--reps-null", reps_null, "null replications");
  simulate->add_option("--reps-alt", reps_alt, "alternative replications");
  simulate->add_option("--seed", seed, "master seed");
  simulate->add_option("--radius", radius, "oracle or data:<c>");
  simulate->add_option("--methods", methods, "comma-separated method list");
  simulate->add_option("--workers", workers, "worker threads (results identical)");
  simulate->add_option("--sim-grid-points", sim_grid, "lambda grid per axis");
  simulate->add_option("-o,--out", out_path, "output path (default stdout)");
  flags.add_to(simulate);

  double c_mult = 1.5;
  CLI::App* radius_cmd =
      app.add_subcommand("radius", "data-driven radii from raw samples");
  radius_cmd->add_option("-i,--input", input_path, "input file with samples")
      ->required();
  radius_cmd->add_option("--c", c_mult, "inflation multiplier");
  radius_cmd->add_option("-o,--out", out_path, "output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (*test) return cmd_test(input_path, flags, lambda, method, surface_path, out_path);
    if (*sens) return cmd_sensitivity(input_path, flags, rho_grid, out_path);
    if (*simulate)
      return cmd_simulate(scenario, outcome, gamma_grid, reps_null, reps_alt, seed,
                          radius, methods, workers, flags, sim_grid, out_path);
    if (*radius_cmd) return cmd_radius(input_path, c_mult, out_path);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  }
  return 0;
}
