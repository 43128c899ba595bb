#include "bond/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "bond/normal.hpp"

namespace bond {

namespace {

void check_config(const BorrowConfig& config) {
  if (!(config.alpha > 0.0 && config.alpha < 1.0))
    throw std::invalid_argument("config: alpha must lie in (0, 1)");
  if (!(config.theta1 > 0.0) || !std::isfinite(config.theta1))
    throw std::invalid_argument("config: theta1 must be set to a positive value");
  if (config.grid_points < 2)
    throw std::invalid_argument("config: grid_points must be >= 2");
  if (config.lambda_cap < 0.0)
    throw std::invalid_argument("config: lambda_cap must be >= 0");
  if (config.ridge < 0.0)
    throw std::invalid_argument("config: ridge must be >= 0");
}

struct ActiveCell {
  std::size_t source;
  int arm;
  double n_h;
  double ybar_h;
  double var_over_n;  // sigma_hat^2 / n_H
  double drift;       // D_hat at this cell's radius
};

// Borrowable cells: present historical data with an estimable variance.
// Cells with n = 1 cannot enter s_hat and stay pinned at lambda = 0.
std::vector<ActiveCell> collect_active(const TrialLayout& layout,
                                       const RadiusSpec& radii) {
  std::vector<ActiveCell> cells;
  for (std::size_t k = 0; k < layout.historical.size(); ++k) {
    for (int a = 0; a < 2; ++a) {
      const ArmSummary* cell = layout.historical_cell(k, a);
      if (!cell || cell->n < 2) continue;
      const double rho = radii.at(k, a);
      cells.push_back({k, a, static_cast<double>(cell->n), *cell->mean,
                       *cell->variance / static_cast<double>(cell->n),
                       drift_range(layout.kind, *layout.current[a].mean, rho)});
    }
  }
  return cells;
}

}  // namespace

double kappa_hat(const BorrowParams& params, const TrialLayout& layout,
                 const RadiusSpec& radii, const BorrowConfig& config) {
  check_config(config);
  require_valid(layout);
  const WeightProfile prof = weight_profile(params, layout);
  double penalty = 0.0;
  for (std::size_t k = 0; k < layout.historical.size(); ++k) {
    for (int a = 0; a < 2; ++a) {
      const double w = prof.historical[k][a];
      if (w == 0.0) continue;
      penalty += w * drift_range(layout.kind, *layout.current[a].mean, radii.at(k, a));
    }
  }
  const double s = effect_dispersion(params, layout).s;
  return (config.theta1 - penalty) / s;
}

CalibrationResult select_lambda(const TrialLayout& layout, const RadiusSpec& radii,
                                const BorrowConfig& config) {
  check_config(config);
  require_valid(layout);

  const std::vector<ActiveCell> cells = collect_active(layout, radii);
  const std::size_t dim = cells.size();

  // Exhaustive grids grow exponentially; above 4 coordinates fall back to a
  // coarse 21-point grid.
  int points = config.grid_points;
  if (dim > 4) points = std::min(points, 21);
  double evals = 1.0;
  for (std::size_t d = 0; d < dim; ++d) evals *= points;
  if (evals > 2147483647.0)
    throw std::invalid_argument("select_lambda: grid too large (" +
                                std::to_string(dim) + " coordinates at " +
                                std::to_string(points) + " points)");

  const double cap = config.lambda_cap;
  const double step = (points > 1) ? cap / (points - 1) : 0.0;
  std::vector<double> axis(points);
  for (int i = 0; i < points; ++i)
    axis[i] = (i == points - 1) ? cap : cap * i / (points - 1);

  const double n_c0 = static_cast<double>(layout.current[0].n);
  const double n_c1 = static_cast<double>(layout.current[1].n);
  const double vc0 = *layout.current[0].variance / n_c0;
  const double vc1 = *layout.current[1].variance / n_c1;
  if (!(vc0 > 0.0) || !(vc1 > 0.0))
    throw std::domain_error("select_lambda: degenerate current-arm variance");

  CalibrationResult res;
  for (const auto& c : cells) res.active.emplace_back(c.source, c.arm);
  res.grid_step = step;
  if (config.keep_surface)
    res.surface.reserve(static_cast<std::size_t>(evals));

  std::vector<int> idx(dim, 0);
  std::vector<double> lam(dim, 0.0);
  std::vector<double> best_lam(dim, 0.0);
  double best_val = -std::numeric_limits<double>::infinity();
  double best_norm2 = 0.0;
  double best_kappa = 0.0;
  std::size_t ties = 0;

  while (true) {
    for (std::size_t d = 0; d < dim; ++d) lam[d] = axis[idx[d]];

    // Weights and variance at this grid point.
    double denom0 = n_c0, denom1 = n_c1;
    for (std::size_t d = 0; d < dim; ++d)
      (cells[d].arm == 0 ? denom0 : denom1) += lam[d] * cells[d].n_h;
    double s2 = (n_c0 / denom0) * (n_c0 / denom0) * vc0 +
                (n_c1 / denom1) * (n_c1 / denom1) * vc1;
    double penalty = 0.0, norm2 = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      const double w = lam[d] * cells[d].n_h / (cells[d].arm == 0 ? denom0 : denom1);
      s2 += w * w * cells[d].var_over_n;
      penalty += w * cells[d].drift;
      norm2 += lam[d] * lam[d];
    }
    const double kappa = (config.theta1 - penalty) / std::sqrt(s2);
    const double val = kappa - config.ridge * norm2;
    if (config.keep_surface) res.surface.push_back({lam, kappa});

    if (val > best_val) {
      best_val = val;
      best_norm2 = norm2;
      best_kappa = kappa;
      best_lam = lam;
      ties = 1;
    } else if (val == best_val) {
      ++ties;
      if (norm2 < best_norm2 ||
          (norm2 == best_norm2 &&
           std::lexicographical_compare(lam.begin(), lam.end(), best_lam.begin(),
                                        best_lam.end()))) {
        best_norm2 = norm2;
        best_kappa = kappa;
        best_lam = lam;
      }
    }

    std::size_t d = 0;
    for (; d < dim; ++d) {
      if (++idx[d] < points) break;
      idx[d] = 0;
    }
    if (d == dim) break;
  }

  if (!std::isfinite(best_val))
    throw std::domain_error("select_lambda: objective degenerate on the whole grid");

  res.argmax_count = ties;
  res.kappa_hat = best_kappa;
  res.robust_power_proxy =
      1.0 - normal_cdf(normal_quantile(1.0 - config.alpha) - best_kappa);
  BorrowParams lambda;
  lambda.lambda.resize(layout.historical.size());
  for (std::size_t d = 0; d < dim; ++d)
    lambda.lambda[cells[d].source][cells[d].arm] = best_lam[d];
  res.lambda_hat = std::move(lambda);
  res.weights = weight_profile(res.lambda_hat, layout);
  return res;
}

BondRun run_bond(const TrialLayout& layout, const RadiusSpec& radii,
                 const BorrowConfig& config) {
  BondRun run;
  run.calibration = select_lambda(layout, radii, config);
  run.test = test_one_sided(layout, run.calibration.lambda_hat, radii, config.alpha,
                            config.correction);
  return run;
}

std::vector<std::pair<double, BondRun>> sensitivity_sweep(
    const TrialLayout& layout, const std::vector<double>& rho_grid,
    const BorrowConfig& config) {
  if (rho_grid.empty())
    throw std::invalid_argument("sensitivity_sweep: empty radius grid");
  if (!std::is_sorted(rho_grid.begin(), rho_grid.end()))
    throw std::invalid_argument("sensitivity_sweep: radius grid must be ascending");
  require_valid(layout);

  std::vector<std::pair<double, BondRun>> out;
  out.reserve(rho_grid.size());
  for (double rho : rho_grid) {
    RadiusSpec radii;
    radii.rho.resize(layout.historical.size());
    for (std::size_t k = 0; k < layout.historical.size(); ++k)
      for (const auto& [arm, cell] : layout.historical[k])
        if (cell.n >= 1) radii.rho[k][arm] = rho;
    out.emplace_back(rho, run_bond(layout, radii, config));
  }
  return out;
}

}  // namespace bond
