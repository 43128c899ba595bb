#include "bond/summaries.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace bond {

ArmSummary ArmSummary::from_moments(std::size_t n, double mean,
                                    std::optional<double> variance) {
  ArmSummary s;
  s.n = n;
  if (n >= 1) s.mean = mean;
  if (n >= 2) s.variance = variance;
  return s;
}

ArmSummary ArmSummary::binary_rate(std::size_t n, double rate) {
  if (rate < 0.0 || rate > 1.0)
    throw std::invalid_argument("binary rate must lie in [0,1]");
  ArmSummary s;
  s.n = n;
  if (n >= 1) s.mean = rate;
  if (n >= 2)
    s.variance = static_cast<double>(n) / static_cast<double>(n - 1) * rate * (1.0 - rate);
  return s;
}

const ArmSummary* TrialLayout::historical_cell(std::size_t source, int arm) const {
  if (source >= historical.size()) return nullptr;
  auto it = historical[source].find(arm);
  return it == historical[source].end() ? nullptr : &it->second;
}

bool TrialLayout::any_historical(int arm) const {
  for (const auto& src : historical)
    if (auto it = src.find(arm); it != src.end() && it->second.n >= 1) return true;
  return false;
}

std::size_t TrialLayout::historical_n(int arm) const {
  std::size_t total = 0;
  for (const auto& src : historical)
    if (auto it = src.find(arm); it != src.end()) total += it->second.n;
  return total;
}

ArmSummary summarize(std::span<const double> samples, OutcomeKind kind) {
  const std::size_t n = samples.size();
  if (kind == OutcomeKind::binary) {
    for (std::size_t i = 0; i < n; ++i) {
      if (samples[i] != 0.0 && samples[i] != 1.0) {
        std::ostringstream os;
        os << "binary sample at index " << i << " is " << samples[i]
           << ", expected 0 or 1";
        throw std::invalid_argument(os.str());
      }
    }
  }
  ArmSummary s;
  s.n = n;
  if (n == 0) return s;

  double sum = 0.0;
  for (double v : samples) sum += v;
  const double mean = sum / static_cast<double>(n);
  s.mean = mean;
  if (n < 2) return s;

  if (kind == OutcomeKind::binary) {
    // Exact identity for 0/1 data; avoids two-pass rounding noise.
    s.variance = static_cast<double>(n) / static_cast<double>(n - 1) * mean * (1.0 - mean);
  } else {
    double ss = 0.0;
    for (double v : samples) ss += (v - mean) * (v - mean);
    s.variance = ss / static_cast<double>(n - 1);
  }
  return s;
}

namespace {

void check_cell(const ArmSummary& cell, OutcomeKind kind, const std::string& label,
                std::vector<std::string>& out) {
  if (cell.n == 0) {
    if (cell.mean) out.push_back(label + ": mean present with n = 0");
    if (cell.variance) out.push_back(label + ": variance present with n = 0");
    return;
  }
  if (!cell.mean) out.push_back(label + ": mean missing");
  if (cell.n < 2 && cell.variance)
    out.push_back(label + ": variance present with n < 2");
  if (cell.variance && *cell.variance < 0.0)
    out.push_back(label + ": variance is negative");
  if (kind == OutcomeKind::binary && cell.mean &&
      (*cell.mean < 0.0 || *cell.mean > 1.0))
    out.push_back(label + ": binary mean outside [0,1]");
}

}  // namespace

std::vector<std::string> validate_layout(const TrialLayout& layout) {
  std::vector<std::string> out;
  static const char* arm_name[2] = {"control", "treatment"};
  for (int a = 0; a < 2; ++a) {
    const ArmSummary& cell = layout.current[a];
    std::string label = std::string("current.") + arm_name[a];
    if (cell.n < 2) {
      out.push_back(label + ": variance not estimable (n < 2 in a current arm)");
      continue;
    }
    if (!cell.variance) out.push_back(label + ": variance missing");
    check_cell(cell, layout.kind, label, out);
  }
  for (std::size_t k = 0; k < layout.historical.size(); ++k) {
    for (const auto& [arm, cell] : layout.historical[k]) {
      std::string label = "historical." + std::to_string(k + 1) + "." +
                          (arm == 0 ? "control" : arm == 1 ? "treatment"
                                                           : "arm" + std::to_string(arm));
      if (arm != 0 && arm != 1) out.push_back(label + ": arm index must be 0 or 1");
      if (cell.n == 0) out.push_back(label + ": empty cell should be omitted");
      check_cell(cell, layout.kind, label, out);
    }
  }
  return out;
}

void require_valid(const TrialLayout& layout) {
  auto errs = validate_layout(layout);
  if (errs.empty()) return;
  std::string msg = "invalid trial layout:";
  for (const auto& e : errs) msg += "\n  " + e;
  throw std::invalid_argument(msg);
}

}  // namespace bond
