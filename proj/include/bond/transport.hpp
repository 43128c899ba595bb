#pragma once

#include <map>
#include <span>
#include <vector>

#include "bond/summaries.hpp"

namespace bond {

// Worst-case mean shifts over a 1-Wasserstein ball of radius rho centered at
// the current arm's law: plus >= 0 >= minus, both in outcome units.
struct ShiftBounds {
  double plus = 0.0;
  double minus = 0.0;
};

// Per-(source, arm) ambiguity radii.
struct RadiusSpec {
  enum class Origin { fixed, data_driven };

  std::vector<std::map<int, double>> rho;  // [source][arm] -> radius
  Origin origin = Origin::fixed;
  double inflation = 1.0;  // multiplier c when data-driven

  static RadiusSpec two_arm(double rho0, double rho1);
  static RadiusSpec control_only(double rho0);

  const double* find(std::size_t source, int arm) const;
  double at(std::size_t source, int arm) const;  // throws when absent
  double max_radius(int arm) const;              // 0 when no entries
};

// Exact 1-Wasserstein distance between the empirical measures of x and y,
// computed as the area between the two empirical CDFs (merged sweep; handles
// unequal sizes and ties deterministically).
double w1_empirical(std::span<const double> x, std::span<const double> y);

// Data-driven radius proxy rho_hat[k][a] = c * W1(current arm a, source k arm a)
// for every (source, arm) cell present in `historical`.
RadiusSpec estimate_radii(const std::map<int, std::vector<double>>& current,
                          const std::vector<std::map<int, std::vector<double>>>& historical,
                          double c);

// Closed-form worst-case mean shifts. Continuous outcomes give (+rho, -rho);
// binary outcomes clamp at the unit interval around the center.
ShiftBounds shift_bounds(OutcomeKind kind, double center, double rho);

// Width of the feasible mean-drift interval, plus - minus.
double drift_range(OutcomeKind kind, double center, double rho);

}  // namespace bond
