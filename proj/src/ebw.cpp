#include "bond/ebw.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace bond {

BorrowParams BorrowParams::two_arm(double l0, double l1) {
  BorrowParams p;
  p.lambda.push_back({{0, l0}, {1, l1}});
  return p;
}

BorrowParams BorrowParams::none() { return BorrowParams{}; }

double BorrowParams::at(std::size_t source, int arm) const {
  if (source >= lambda.size()) return 0.0;
  auto it = lambda[source].find(arm);
  return it == lambda[source].end() ? 0.0 : it->second;
}

bool BorrowParams::all_zero() const {
  for (const auto& src : lambda)
    for (const auto& [arm, l] : src)
      if (l != 0.0) return false;
  return true;
}

double WeightProfile::historical_total(int arm) const {
  double total = 0.0;
  for (const auto& w : historical) total += w[arm];
  return total;
}

double weight(double lambda, std::size_t n_current, std::size_t n_historical) {
  if (n_current == 0) throw std::invalid_argument("weight: n_current must be >= 1");
  if (lambda < 0.0) throw std::invalid_argument("weight: lambda must be >= 0");
  if (n_historical == 0) return 0.0;
  const double ln = lambda * static_cast<double>(n_historical);
  return ln / (static_cast<double>(n_current) + ln);
}

double weight_inverse(double w, std::size_t n_current, std::size_t n_historical) {
  if (n_current == 0 || n_historical == 0)
    throw std::invalid_argument("weight_inverse: sample sizes must be >= 1");
  if (w < 0.0 || w >= 1.0)
    throw std::invalid_argument("weight_inverse: w must lie in [0, 1)");
  return static_cast<double>(n_current) / static_cast<double>(n_historical) * w /
         (1.0 - w);
}

WeightProfile weight_profile(const BorrowParams& params, const TrialLayout& layout) {
  WeightProfile prof;
  prof.historical.assign(layout.historical.size(), {0.0, 0.0});
  for (int a = 0; a < 2; ++a) {
    const double n_c = static_cast<double>(layout.current[a].n);
    if (n_c < 1.0) throw std::invalid_argument("weight_profile: current arm empty");
    double denom = n_c;
    for (std::size_t k = 0; k < layout.historical.size(); ++k) {
      const ArmSummary* cell = layout.historical_cell(k, a);
      if (cell && cell->n >= 1)
        denom += params.at(k, a) * static_cast<double>(cell->n);
    }
    double hist_sum = 0.0;
    for (std::size_t k = 0; k < layout.historical.size(); ++k) {
      const ArmSummary* cell = layout.historical_cell(k, a);
      if (!cell || cell->n == 0) continue;
      const double w = params.at(k, a) * static_cast<double>(cell->n) / denom;
      prof.historical[k][a] = w;
      hist_sum += w;
    }
    prof.current[a] = 1.0 - hist_sum;
  }
  return prof;
}

double estimate_mean(const BorrowParams& params, const TrialLayout& layout, int arm) {
  const ArmSummary& cur = layout.current[arm];
  if (cur.n < 1 || !cur.mean)
    throw std::invalid_argument("estimate_mean: current arm has no data");
  double num = static_cast<double>(cur.n) * *cur.mean;
  double den = static_cast<double>(cur.n);
  for (std::size_t k = 0; k < layout.historical.size(); ++k) {
    const ArmSummary* cell = layout.historical_cell(k, arm);
    if (!cell || cell->n == 0) continue;
    const double ln = params.at(k, arm) * static_cast<double>(cell->n);
    num += ln * *cell->mean;
    den += ln;
  }
  return num / den;
}

double estimate_effect(const BorrowParams& params, const TrialLayout& layout) {
  return estimate_mean(params, layout, 1) - estimate_mean(params, layout, 0);
}

const double* TrueVariances::find(std::size_t source, int arm) const {
  if (source >= historical.size()) return nullptr;
  auto it = historical[source].find(arm);
  return it == historical[source].end() ? nullptr : &it->second;
}

Dispersion effect_dispersion(const BorrowParams& params, const TrialLayout& layout,
                             const TrueVariances* known) {
  const WeightProfile prof = weight_profile(params, layout);
  double s2 = 0.0;
  for (int a = 0; a < 2; ++a) {
    const ArmSummary& cur = layout.current[a];
    const double* cur_var = nullptr;
    if (known && known->current[a]) cur_var = &*known->current[a];
    else if (cur.variance) cur_var = &*cur.variance;
    if (!cur_var)
      throw std::invalid_argument(
          "effect_dispersion: variance missing for current arm " + std::to_string(a));
    const double wc = prof.current[a];
    s2 += wc * wc * *cur_var / static_cast<double>(cur.n);

    for (std::size_t k = 0; k < layout.historical.size(); ++k) {
      const double w = prof.historical[k][a];
      if (w == 0.0) continue;  // n_H = 0 or lambda = 0 cells contribute nothing
      const ArmSummary* cell = layout.historical_cell(k, a);
      const double* var = nullptr;
      if (known) var = known->find(k, a);
      if (!var && cell->variance) var = &*cell->variance;
      if (!var)
        throw std::invalid_argument("effect_dispersion: variance missing for historical source " +
                                    std::to_string(k + 1) + ", arm " + std::to_string(a));
      s2 += w * w * *var / static_cast<double>(cell->n);
    }
  }
  if (!(s2 > 0.0))
    throw std::domain_error("effect_dispersion: degenerate variance (s^2 = 0)");
  return {s2, std::sqrt(s2)};
}

}  // namespace bond
