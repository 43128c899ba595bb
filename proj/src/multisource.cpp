#include "bond/multisource.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "bond/normal.hpp"

namespace bond {
namespace multisource {

const ArmSummary* MultiLayout::historical_cell(std::size_t source, int arm) const {
  if (source >= historical.size()) return nullptr;
  auto it = historical[source].find(arm);
  return it == historical[source].end() ? nullptr : &it->second;
}

Contrast Contrast::two_arm() { return Contrast{{{0, -1.0}, {1, 1.0}}}; }

namespace {

const ArmSummary& current_cell(const MultiLayout& layout, int arm) {
  auto it = layout.current.find(arm);
  if (it == layout.current.end() || it->second.n < 1 || !it->second.mean)
    throw std::invalid_argument("multisource: current arm " + std::to_string(arm) +
                                " has no data");
  return it->second;
}

void check_contrast(const MultiLayout& layout, const Contrast& contrast) {
  bool any = false;
  for (const auto& [arm, c] : contrast.coef) {
    if (c == 0.0) continue;
    any = true;
    current_cell(layout, arm);
  }
  if (!any) throw std::invalid_argument("contrast has no nonzero coefficient");
}

double resolve_center(const MultiLayout& layout, CorrectionMode mode,
                      const std::map<int, double>* oracle_centers, int arm) {
  if (mode == CorrectionMode::oracle) {
    if (!oracle_centers || !oracle_centers->count(arm))
      throw std::invalid_argument("oracle correction needs a center for arm " +
                                  std::to_string(arm));
    return oracle_centers->at(arm);
  }
  return *current_cell(layout, arm).mean;
}

// b with `upper` selecting the rejection direction; b- = -b(+ with flipped c).
double contrast_bias(const BorrowParams& params, const MultiLayout& layout,
                     const Contrast& contrast, const RadiusSpec& radii,
                     CorrectionMode mode, const std::map<int, double>* oracle_centers,
                     bool upper) {
  check_contrast(layout, contrast);
  const MultiWeights weights = weight_profile(params, layout);
  double total = 0.0;
  for (const auto& [arm, c] : contrast.coef) {
    if (c == 0.0) continue;
    const double c_signed = upper ? c : -c;
    for (std::size_t k = 0; k < weights.historical.size(); ++k) {
      auto it = weights.historical[k].find(arm);
      if (it == weights.historical[k].end() || it->second == 0.0) continue;
      const double rho = radii.at(k, arm);
      double delta;
      if (mode == CorrectionMode::universal || layout.kind == OutcomeKind::continuous) {
        delta = (c_signed >= 0.0) ? rho : -rho;
      } else {
        ShiftBounds b =
            shift_bounds(layout.kind, resolve_center(layout, mode, oracle_centers, arm), rho);
        delta = (c_signed >= 0.0) ? b.plus : b.minus;
      }
      total += c_signed * it->second * delta;
    }
  }
  return upper ? total : -total;
}

}  // namespace

MultiWeights weight_profile(const BorrowParams& params, const MultiLayout& layout) {
  MultiWeights prof;
  prof.historical.resize(layout.historical.size());
  for (const auto& [arm, cur] : layout.current) {
    if (cur.n < 1) continue;
    double denom = static_cast<double>(cur.n);
    for (std::size_t k = 0; k < layout.historical.size(); ++k) {
      const ArmSummary* cell = layout.historical_cell(k, arm);
      if (cell && cell->n >= 1)
        denom += params.at(k, arm) * static_cast<double>(cell->n);
    }
    double hist_sum = 0.0;
    for (std::size_t k = 0; k < layout.historical.size(); ++k) {
      const ArmSummary* cell = layout.historical_cell(k, arm);
      if (!cell || cell->n == 0) continue;
      const double w = params.at(k, arm) * static_cast<double>(cell->n) / denom;
      prof.historical[k][arm] = w;
      hist_sum += w;
    }
    prof.current[arm] = 1.0 - hist_sum;
  }
  return prof;
}

double estimate_mean(const BorrowParams& params, const MultiLayout& layout, int arm) {
  const ArmSummary& cur = current_cell(layout, arm);
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

double contrast_effect(const BorrowParams& params, const MultiLayout& layout,
                       const Contrast& contrast) {
  check_contrast(layout, contrast);
  double total = 0.0;
  for (const auto& [arm, c] : contrast.coef) {
    if (c == 0.0) continue;
    total += c * estimate_mean(params, layout, arm);
  }
  return total;
}

double contrast_bias_plus(const BorrowParams& params, const MultiLayout& layout,
                          const Contrast& contrast, const RadiusSpec& radii,
                          CorrectionMode mode,
                          const std::map<int, double>* oracle_centers) {
  return contrast_bias(params, layout, contrast, radii, mode, oracle_centers, true);
}

double contrast_bias_minus(const BorrowParams& params, const MultiLayout& layout,
                           const Contrast& contrast, const RadiusSpec& radii,
                           CorrectionMode mode,
                           const std::map<int, double>* oracle_centers) {
  return contrast_bias(params, layout, contrast, radii, mode, oracle_centers, false);
}

ContrastDispersion contrast_dispersion(const BorrowParams& params,
                                       const MultiLayout& layout,
                                       const Contrast& contrast) {
  check_contrast(layout, contrast);
  const MultiWeights prof = weight_profile(params, layout);
  double s2 = 0.0;
  for (const auto& [arm, c] : contrast.coef) {
    if (c == 0.0) continue;
    const ArmSummary& cur = current_cell(layout, arm);
    if (!cur.variance)
      throw std::invalid_argument("contrast_dispersion: current arm " +
                                  std::to_string(arm) + " variance missing");
    const double wc = prof.current.at(arm);
    double arm_var = wc * wc * *cur.variance / static_cast<double>(cur.n);
    for (std::size_t k = 0; k < layout.historical.size(); ++k) {
      auto it = prof.historical[k].find(arm);
      if (it == prof.historical[k].end() || it->second == 0.0) continue;
      const ArmSummary* cell = layout.historical_cell(k, arm);
      if (!cell->variance)
        throw std::invalid_argument("contrast_dispersion: historical source " +
                                    std::to_string(k + 1) + ", arm " +
                                    std::to_string(arm) + " variance missing");
      arm_var += it->second * it->second * *cell->variance / static_cast<double>(cell->n);
    }
    s2 += c * c * arm_var;
  }
  if (!(s2 > 0.0)) throw std::domain_error("contrast_dispersion: degenerate variance");
  return {s2, std::sqrt(s2)};
}

RobustTestResult contrast_test(const BorrowParams& params, const MultiLayout& layout,
                               const Contrast& contrast, const RadiusSpec& radii,
                               double alpha, CorrectionMode mode,
                               const std::map<int, double>* oracle_centers) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("alpha must lie in (0, 1)");
  RobustTestResult res;
  res.alpha = alpha;
  res.theta_hat = contrast_effect(params, layout, contrast);
  res.s_hat = contrast_dispersion(params, layout, contrast).s;
  res.corrections.mode = mode;
  res.corrections.plus =
      contrast_bias_plus(params, layout, contrast, radii, mode, oracle_centers);
  res.corrections.minus =
      contrast_bias_minus(params, layout, contrast, radii, mode, oracle_centers);
  res.statistic_upper = (res.theta_hat - res.corrections.plus) / res.s_hat;
  res.statistic_lower = (res.theta_hat - res.corrections.minus) / res.s_hat;
  res.p_one_sided = normal_sf(res.statistic_upper);
  const double z_two = normal_quantile(1.0 - alpha / 2.0);
  res.ci_lower = res.theta_hat - res.corrections.plus - z_two * res.s_hat;
  res.ci_upper = res.theta_hat - res.corrections.minus + z_two * res.s_hat;
  res.reject = res.statistic_upper >= normal_quantile(1.0 - alpha);
  return res;
}

double contrast_kappa(const BorrowParams& params, const MultiLayout& layout,
                      const Contrast& contrast, const RadiusSpec& radii,
                      const BorrowConfig& config) {
  if (!(config.theta1 > 0.0))
    throw std::invalid_argument("config: theta1 must be positive");
  const MultiWeights prof = weight_profile(params, layout);
  double penalty = 0.0;
  for (const auto& [arm, c] : contrast.coef) {
    if (c == 0.0) continue;
    for (std::size_t k = 0; k < prof.historical.size(); ++k) {
      auto it = prof.historical[k].find(arm);
      if (it == prof.historical[k].end() || it->second == 0.0) continue;
      penalty += std::abs(c) * it->second *
                 drift_range(layout.kind, *current_cell(layout, arm).mean,
                             radii.at(k, arm));
    }
  }
  return (config.theta1 - penalty) / contrast_dispersion(params, layout, contrast).s;
}

ContrastCalibration select_lambda(const MultiLayout& layout, const Contrast& contrast,
                                  const RadiusSpec& radii, const BorrowConfig& config) {
  check_contrast(layout, contrast);

  struct Coord {
    std::size_t source;
    int arm;
  };
  std::vector<Coord> coords;
  for (std::size_t k = 0; k < layout.historical.size(); ++k) {
    for (const auto& [arm, cell] : layout.historical[k]) {
      auto it = contrast.coef.find(arm);
      if (it == contrast.coef.end() || it->second == 0.0) continue;
      if (cell.n < 2) continue;
      radii.at(k, arm);  // radius must exist for every borrowable cell
      coords.push_back({k, arm});
    }
  }

  int points = config.grid_points;
  if (coords.size() > 4) points = std::min(points, 21);
  double evals = 1.0;
  for (std::size_t d = 0; d < coords.size(); ++d) evals *= points;
  if (evals > 2147483647.0)
    throw std::invalid_argument("multisource::select_lambda: grid too large");

  const double cap = config.lambda_cap;
  std::vector<double> axis(points);
  for (int i = 0; i < points; ++i)
    axis[i] = (i == points - 1) ? cap : cap * i / (points - 1);

  ContrastCalibration res;
  for (const auto& c : coords) res.active.emplace_back(c.source, c.arm);
  res.grid_step = (points > 1) ? cap / (points - 1) : 0.0;

  std::vector<int> idx(coords.size(), 0);
  std::vector<double> lam(coords.size(), 0.0);
  std::vector<double> best_lam(coords.size(), 0.0);
  double best_val = -std::numeric_limits<double>::infinity();
  double best_norm2 = 0.0, best_kappa = 0.0;
  std::size_t ties = 0;

  BorrowParams params;
  params.lambda.resize(layout.historical.size());
  while (true) {
    for (std::size_t d = 0; d < coords.size(); ++d) {
      lam[d] = axis[idx[d]];
      params.lambda[coords[d].source][coords[d].arm] = lam[d];
    }
    const double kappa = contrast_kappa(params, layout, contrast, radii, config);
    double norm2 = 0.0;
    for (double l : lam) norm2 += l * l;
    const double val = kappa - config.ridge * norm2;

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
    for (; d < coords.size(); ++d) {
      if (++idx[d] < points) break;
      idx[d] = 0;
    }
    if (d == coords.size()) break;
  }

  res.argmax_count = ties;
  res.kappa_hat = best_kappa;
  res.robust_power_proxy =
      1.0 - normal_cdf(normal_quantile(1.0 - config.alpha) - best_kappa);
  BorrowParams lambda;
  lambda.lambda.resize(layout.historical.size());
  for (std::size_t d = 0; d < coords.size(); ++d)
    lambda.lambda[coords[d].source][coords[d].arm] = best_lam[d];
  res.lambda_hat = std::move(lambda);
  return res;
}

std::map<int, std::vector<double>> coarsen_labels(
    const std::vector<std::pair<std::string, double>>& records,
    const std::map<std::string, int>& label_map) {
  std::vector<std::string> unmapped;
  std::map<int, std::vector<double>> groups;
  for (const auto& [label, y] : records) {
    auto it = label_map.find(label);
    if (it == label_map.end()) {
      if (std::find(unmapped.begin(), unmapped.end(), label) == unmapped.end())
        unmapped.push_back(label);
      continue;
    }
    groups[it->second].push_back(y);
  }
  if (!unmapped.empty()) {
    std::ostringstream os;
    os << "coarsen: unmapped treatment labels:";
    for (const auto& l : unmapped) os << " '" << l << "'";
    throw std::invalid_argument(os.str());
  }
  return groups;
}

std::map<int, std::vector<double>> coarsen_doses(
    const std::vector<std::pair<double, double>>& records,
    const std::vector<double>& bin_edges) {
  if (bin_edges.empty())
    throw std::invalid_argument("coarsen: bin edges must be nonempty");
  for (std::size_t i = 1; i < bin_edges.size(); ++i)
    if (!(bin_edges[i - 1] < bin_edges[i]))
      throw std::invalid_argument("coarsen: bin edges must be strictly increasing");

  std::map<int, std::vector<double>> groups;
  std::vector<double> unmapped;
  for (const auto& [dose, y] : records) {
    auto it = std::upper_bound(bin_edges.begin(), bin_edges.end(), dose);
    if (it == bin_edges.begin()) {
      unmapped.push_back(dose);
      continue;
    }
    groups[static_cast<int>(it - bin_edges.begin()) - 1].push_back(y);
  }
  if (!unmapped.empty()) {
    std::ostringstream os;
    os << "coarsen: doses below the first bin edge:";
    for (double d : unmapped) os << " " << d;
    throw std::invalid_argument(os.str());
  }
  return groups;
}

MultiLayout from_two_arm(const TrialLayout& layout) {
  MultiLayout m;
  m.kind = layout.kind;
  m.current[0] = layout.current[0];
  m.current[1] = layout.current[1];
  m.historical = layout.historical;
  return m;
}

}  // namespace multisource
}  // namespace bond
