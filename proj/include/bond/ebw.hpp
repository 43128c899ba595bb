#pragma once

#include <array>
#include <map>
#include <optional>
#include <vector>

#include "bond/summaries.hpp"

namespace bond {

// Borrowing parameters lambda_{k,a} per (historical source, arm). Coordinates
// absent from the map are pinned at 0 (no borrowing).
struct BorrowParams {
  std::vector<std::map<int, double>> lambda;

  static BorrowParams two_arm(double l0, double l1);
  static BorrowParams none();
  double at(std::size_t source, int arm) const;  // 0 when absent
  bool all_zero() const;
};

// Effective borrowing weights for a two-arm layout: per-arm current weight
// plus per-(source, arm) historical weights; they sum to 1 within each arm.
struct WeightProfile {
  std::array<double, 2> current{1.0, 1.0};
  std::vector<std::array<double, 2>> historical;

  double historical_total(int arm) const;
};

// w(lambda) = lambda*n_H / (n_C + lambda*n_H); 0 when n_H = 0.
double weight(double lambda, std::size_t n_current, std::size_t n_historical);

// Inverse of `weight` in lambda for fixed sample sizes; `weight` is a
// bijection from [0, inf) onto [0, 1).
double weight_inverse(double w, std::size_t n_current, std::size_t n_historical);

WeightProfile weight_profile(const BorrowParams& params, const TrialLayout& layout);

// Convex combination of current and historical means for one arm.
double estimate_mean(const BorrowParams& params, const TrialLayout& layout, int arm);

// Treatment effect estimate: mean(arm 1) - mean(arm 0).
double estimate_effect(const BorrowParams& params, const TrialLayout& layout);

struct Dispersion {
  double s2 = 0.0;
  double s = 0.0;
};

// Known outcome variances for benchmark analyses; plug-in sample variances
// are used wherever an entry is absent.
struct TrueVariances {
  std::array<std::optional<double>, 2> current;
  std::vector<std::map<int, double>> historical;

  const double* find(std::size_t source, int arm) const;
};

// Asymptotic variance of the effect estimate (and its square root). Plug-in
// by default; pass `known` to inject true variances.
Dispersion effect_dispersion(const BorrowParams& params, const TrialLayout& layout,
                             const TrueVariances* known = nullptr);

}  // namespace bond
