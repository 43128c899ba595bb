#pragma once

#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include "bond/robust_test.hpp"

namespace bond {

struct BorrowConfig {
  double alpha = 0.025;
  // Target alternative effect; mandatory, no default (NaN trips validation).
  double theta1 = std::numeric_limits<double>::quiet_NaN();
  double lambda_cap = 1.0;  // cap per borrowing coordinate
  int grid_points = 201;    // per active coordinate, endpoints 0 and cap included
  double ridge = 0.0;       // optional stabilizer eta, subtracts eta*|lambda|^2
  CorrectionMode correction = CorrectionMode::plug_in;
  bool keep_surface = false;
};

struct SurfacePoint {
  std::vector<double> lambda;  // active coordinates, canonical (source, arm) order
  double kappa = 0.0;
};

struct CalibrationResult {
  BorrowParams lambda_hat;
  WeightProfile weights;
  double kappa_hat = 0.0;
  double robust_power_proxy = 0.0;
  std::vector<std::pair<std::size_t, int>> active;  // borrowable (source, arm) cells
  double grid_step = 0.0;
  std::size_t argmax_count = 1;  // size of the exact argmax set before tie-breaking
  std::vector<SurfacePoint> surface;
};

struct BondRun {
  CalibrationResult calibration;
  RobustTestResult test;
};

// Plug-in robust noncentrality parameter
//   kappa = (theta1 - sum_{a,k} w_{k,a} D_{k,a}(rho_{k,a})) / s_hat(lambda),
// with drift ranges evaluated at the observed current-arm means.
double kappa_hat(const BorrowParams& params, const TrialLayout& layout,
                 const RadiusSpec& radii, const BorrowConfig& config);

// Exhaustive grid maximization of kappa_hat (minus the optional ridge) with a
// deterministic tie rule: smallest Euclidean norm, then lexicographic order.
// Coordinates without usable historical data are pinned at 0.
CalibrationResult select_lambda(const TrialLayout& layout, const RadiusSpec& radii,
                                const BorrowConfig& config);

// Full pipeline: calibrate lambda, then run the robust one-sided Wald test at
// the selected value.
BondRun run_bond(const TrialLayout& layout, const RadiusSpec& radii,
                 const BorrowConfig& config);

// One run_bond per radius; the radius is applied to every borrowable
// (source, arm) cell. The grid must be sorted ascending.
std::vector<std::pair<double, BondRun>> sensitivity_sweep(
    const TrialLayout& layout, const std::vector<double>& rho_grid,
    const BorrowConfig& config);

}  // namespace bond
