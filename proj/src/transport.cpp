#include "bond/transport.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace bond {

RadiusSpec RadiusSpec::two_arm(double rho0, double rho1) {
  RadiusSpec r;
  r.rho.push_back({{0, rho0}, {1, rho1}});
  return r;
}

RadiusSpec RadiusSpec::control_only(double rho0) {
  RadiusSpec r;
  r.rho.push_back({{0, rho0}});
  return r;
}

const double* RadiusSpec::find(std::size_t source, int arm) const {
  if (source >= rho.size()) return nullptr;
  auto it = rho[source].find(arm);
  return it == rho[source].end() ? nullptr : &it->second;
}

double RadiusSpec::at(std::size_t source, int arm) const {
  const double* p = find(source, arm);
  if (!p)
    throw std::invalid_argument("no radius for historical source " +
                                std::to_string(source + 1) + ", arm " +
                                std::to_string(arm));
  return *p;
}

double RadiusSpec::max_radius(int arm) const {
  double m = 0.0;
  for (const auto& src : rho)
    if (auto it = src.find(arm); it != src.end()) m = std::max(m, it->second);
  return m;
}

double w1_empirical(std::span<const double> x, std::span<const double> y) {
  if (x.empty() || y.empty())
    throw std::invalid_argument("w1_empirical: empty sample");
  std::vector<double> xs(x.begin(), x.end());
  std::vector<double> ys(y.begin(), y.end());
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());

  const double nx = static_cast<double>(xs.size());
  const double ny = static_cast<double>(ys.size());
  std::size_t i = 0, j = 0;
  double prev = std::min(xs.front(), ys.front());
  double dist = 0.0;
  while (i < xs.size() || j < ys.size()) {
    double t;
    if (i == xs.size()) t = ys[j];
    else if (j == ys.size()) t = xs[i];
    else t = std::min(xs[i], ys[j]);

    const double fx = static_cast<double>(i) / nx;
    const double fy = static_cast<double>(j) / ny;
    dist += std::abs(fx - fy) * (t - prev);

    while (i < xs.size() && xs[i] == t) ++i;
    while (j < ys.size() && ys[j] == t) ++j;
    prev = t;
  }
  return dist;
}

RadiusSpec estimate_radii(const std::map<int, std::vector<double>>& current,
                          const std::vector<std::map<int, std::vector<double>>>& historical,
                          double c) {
  if (c < 1.0) throw std::invalid_argument("inflation multiplier c must be >= 1");
  RadiusSpec out;
  out.origin = RadiusSpec::Origin::data_driven;
  out.inflation = c;
  out.rho.resize(historical.size());
  for (std::size_t k = 0; k < historical.size(); ++k) {
    for (const auto& [arm, hist_samples] : historical[k]) {
      auto it = current.find(arm);
      if (it == current.end() || it->second.empty() || hist_samples.empty())
        throw std::invalid_argument(
            "estimate_radii: historical source " + std::to_string(k + 1) +
            " arm " + std::to_string(arm) + " lacks samples on one side");
      out.rho[k][arm] = c * w1_empirical(it->second, hist_samples);
    }
  }
  return out;
}

ShiftBounds shift_bounds(OutcomeKind kind, double center, double rho) {
  if (rho < 0.0) throw std::invalid_argument("radius must be nonnegative");
  if (kind == OutcomeKind::continuous) return {rho, -rho};
  if (center < 0.0 || center > 1.0)
    throw std::invalid_argument("binary center must lie in [0,1]");
  return {std::min(rho, 1.0 - center), -std::min(rho, center)};
}

double drift_range(OutcomeKind kind, double center, double rho) {
  ShiftBounds b = shift_bounds(kind, center, rho);
  return b.plus - b.minus;
}

}  // namespace bond
