#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace bond {
namespace testing {

double assignment_cost(const std::vector<std::vector<double>>& cost) {
  const int n = static_cast<int>(cost.size());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> match(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      int i0 = match[j0], j1 = -1;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0);
  }
  double total = 0.0;
  for (int j = 1; j <= n; ++j) total += cost[match[j] - 1][j - 1];
  return total;
}

double w1_lp_oracle(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t l = std::lcm(x.size(), y.size());
  std::vector<double> xs, ys;
  for (double v : x)
    for (std::size_t r = 0; r < l / x.size(); ++r) xs.push_back(v);
  for (double v : y)
    for (std::size_t r = 0; r < l / y.size(); ++r) ys.push_back(v);
  std::vector<std::vector<double>> cost(l, std::vector<double>(l));
  for (std::size_t i = 0; i < l; ++i)
    for (std::size_t j = 0; j < l; ++j) cost[i][j] = std::abs(xs[i] - ys[j]);
  return assignment_cost(cost) / static_cast<double>(l);
}

namespace {

// Extreme feasible shift for one cell: candidates are the clamp branches,
// kept only when they satisfy both the budget and the support constraint.
double extreme_shift(OutcomeKind kind, double mu, double rho, bool up) {
  if (kind == OutcomeKind::continuous) return rho;
  const double support = up ? 1.0 - mu : mu;
  double best = 0.0;
  for (double cand : {rho, support})
    if (cand <= rho && cand <= support && cand > best) best = cand;
  return best;
}

}  // namespace

double bias_enumeration(const WeightProfile& weights,
                        const std::vector<std::map<int, double>>& rho,
                        OutcomeKind kind, const std::array<double, 2>& centers,
                        bool upper) {
  double total = 0.0;
  for (std::size_t k = 0; k < weights.historical.size(); ++k) {
    for (int arm = 0; arm < 2; ++arm) {
      const double w = weights.historical[k][arm];
      if (w == 0.0) continue;
      const double r = rho[k].at(arm);
      // Arm 1 enters with +w, arm 0 with -w; the optimizer pushes arm 1 up
      // and arm 0 down for b+, and the reverse for b-.
      const bool cell_up = (arm == 1) == upper;
      const double shift = extreme_shift(kind, centers[arm], r, cell_up);
      const double signed_shift = cell_up ? shift : -shift;
      total += (arm == 1 ? w : -w) * signed_shift;
    }
  }
  return total;
}

TrialLayout random_layout(Rng& rng, OutcomeKind kind) {
  TrialLayout layout;
  layout.kind = kind;
  auto cell = [&]() {
    const std::size_t n = 20 + (rng.next_u64() % 381);
    if (kind == OutcomeKind::binary) {
      const double p = 0.05 + 0.9 * rng.next_uniform();
      return ArmSummary::binary_rate(n, p);
    }
    const double mean = 4.0 * rng.next_uniform() - 2.0;
    const double var = 0.2 + 2.0 * rng.next_uniform();
    return ArmSummary::from_moments(n, mean, var);
  };
  layout.current[0] = cell();
  layout.current[1] = cell();
  layout.historical.resize(1);
  layout.historical[0][0] = cell();
  layout.historical[0][1] = cell();
  return layout;
}

TrialLayout orr_layout() {
  TrialLayout layout;
  layout.kind = OutcomeKind::binary;
  layout.current[0] = ArmSummary::binary_rate(470, 0.128);
  layout.current[1] = ArmSummary::binary_rate(464, 0.284);
  layout.historical.resize(1);
  layout.historical[0][0] = ArmSummary::binary_rate(610, 0.367);
  return layout;
}

}  // namespace testing
}  // namespace bond
