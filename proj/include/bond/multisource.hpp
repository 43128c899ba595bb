#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "bond/calibrate.hpp"

namespace bond {
namespace multisource {

// Layout over an arbitrary finite arm set; arm ids are opaque integers.
struct MultiLayout {
  OutcomeKind kind = OutcomeKind::continuous;
  std::map<int, ArmSummary> current;
  std::vector<std::map<int, ArmSummary>> historical;

  const ArmSummary* historical_cell(std::size_t source, int arm) const;
};

// Linear contrast sum_a c_a * mu_a over the layout's arm set.
struct Contrast {
  std::map<int, double> coef;

  static Contrast two_arm();  // treatment minus control, c = (-1, +1)
};

struct MultiWeights {
  std::map<int, double> current;                     // w_{C,a}
  std::vector<std::map<int, double>> historical;     // w_{k,a}
};

MultiWeights weight_profile(const BorrowParams& params, const MultiLayout& layout);

double estimate_mean(const BorrowParams& params, const MultiLayout& layout, int arm);

// theta_hat(lambda; c) = sum_a c_a mu_hat_a(lambda).
double contrast_effect(const BorrowParams& params, const MultiLayout& layout,
                       const Contrast& contrast);

// Worst-case bias of the contrast estimator in the rejection direction:
// the sign of c_a selects the positive or negative extreme per cell
// (sgn(0) counts as +, though zero coefficients contribute nothing).
double contrast_bias_plus(const BorrowParams& params, const MultiLayout& layout,
                          const Contrast& contrast, const RadiusSpec& radii,
                          CorrectionMode mode,
                          const std::map<int, double>* oracle_centers = nullptr);

double contrast_bias_minus(const BorrowParams& params, const MultiLayout& layout,
                           const Contrast& contrast, const RadiusSpec& radii,
                           CorrectionMode mode,
                           const std::map<int, double>* oracle_centers = nullptr);

struct ContrastDispersion {
  double s2 = 0.0;
  double s = 0.0;
};

ContrastDispersion contrast_dispersion(const BorrowParams& params,
                                       const MultiLayout& layout,
                                       const Contrast& contrast);

// Robust one-sided Wald test of H0: theta_C(c) <= 0.
RobustTestResult contrast_test(const BorrowParams& params, const MultiLayout& layout,
                               const Contrast& contrast, const RadiusSpec& radii,
                               double alpha, CorrectionMode mode = CorrectionMode::plug_in,
                               const std::map<int, double>* oracle_centers = nullptr);

// Contrast analogue of the robust noncentrality parameter.
double contrast_kappa(const BorrowParams& params, const MultiLayout& layout,
                      const Contrast& contrast, const RadiusSpec& radii,
                      const BorrowConfig& config);

struct ContrastCalibration {
  BorrowParams lambda_hat;
  double kappa_hat = 0.0;
  double robust_power_proxy = 0.0;
  std::vector<std::pair<std::size_t, int>> active;
  double grid_step = 0.0;
  std::size_t argmax_count = 1;
};

// Grid maximization of contrast_kappa over the lambda matrix with the same
// deterministic tie rule as calibrate::select_lambda. Coordinates on arms
// with c_a = 0 are pinned (they cannot affect the objective).
ContrastCalibration select_lambda(const MultiLayout& layout, const Contrast& contrast,
                                  const RadiusSpec& radii, const BorrowConfig& config);

// Measurable coarsening of raw treatment labels into arm ids.
std::map<int, std::vector<double>> coarsen_labels(
    const std::vector<std::pair<std::string, double>>& records,
    const std::map<std::string, int>& label_map);

// Numeric doses binned by left edges: arm i covers [edges[i], edges[i+1])
// and the last bin is right-open to infinity. Doses below edges[0] are
// unmapped and raise an error.
std::map<int, std::vector<double>> coarsen_doses(
    const std::vector<std::pair<double, double>>& records,
    const std::vector<double>& bin_edges);

// Two-arm view of a TrialLayout for cross-checking against the single-source
// implementations.
MultiLayout from_two_arm(const TrialLayout& layout);

}  // namespace multisource
}  // namespace bond
