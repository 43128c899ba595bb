#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bond {

enum class OutcomeKind { continuous, binary };

// Sufficient statistics for one (source, arm) cell. The mean is absent when
// n = 0 and the variance (sample variance, divisor n-1) is absent when n < 2;
// callers must handle absence rather than read a sentinel.
struct ArmSummary {
  std::size_t n = 0;
  std::optional<double> mean;
  std::optional<double> variance;

  static ArmSummary from_moments(std::size_t n, double mean,
                                 std::optional<double> variance = std::nullopt);
  // Binary cell from a response rate; variance is the exact n/(n-1)*p*(1-p).
  static ArmSummary binary_rate(std::size_t n, double rate);
};

// Two-arm current trial plus J historical sources. Arm 0 is control, arm 1
// treatment. A historical source may omit arms; the missing cell contributes
// zero borrowing (the n_H = 0 convention is encoded by absence).
struct TrialLayout {
  OutcomeKind kind = OutcomeKind::continuous;
  std::array<ArmSummary, 2> current;
  std::vector<std::map<int, ArmSummary>> historical;

  const ArmSummary* historical_cell(std::size_t source, int arm) const;
  bool any_historical(int arm) const;
  std::size_t historical_n(int arm) const;  // total across sources
};

ArmSummary summarize(std::span<const double> samples, OutcomeKind kind);

// Returns every invariant violation; empty means valid.
std::vector<std::string> validate_layout(const TrialLayout& layout);

// Throws std::invalid_argument listing all violations when the layout is bad.
void require_valid(const TrialLayout& layout);

}  // namespace bond
