#pragma once

#include <vector>

#include "bond/ebw.hpp"
#include "bond/rng.hpp"
#include "bond/transport.hpp"

namespace bond {
namespace testing {

// Minimum cost of a perfect matching on a square cost matrix (Hungarian
// algorithm, shortest augmenting path).
double assignment_cost(const std::vector<std::vector<double>>& cost);

// Brute-force transport LP value for the 1-Wasserstein distance between the
// empirical measures of x and y: masses are split into lcm(|x|,|y|) unit
// atoms per side and matched optimally. Independent of the quantile-sweep
// implementation.
double w1_lp_oracle(const std::vector<double>& x, const std::vector<double>& y);

// Term-by-term enumeration of the worst-case bias for a two-arm layout with
// any number of sources: per cell the extreme shift is found by enumerating
// the feasible clamp branches, then cells are summed with the contrast signs.
// `upper` selects the rejection direction (b+ vs b-).
double bias_enumeration(const WeightProfile& weights,
                        const std::vector<std::map<int, double>>& rho,
                        OutcomeKind kind, const std::array<double, 2>& centers,
                        bool upper);

// Random valid two-arm layout with one historical source (both arms present),
// n between 20 and 400 per cell.
TrialLayout random_layout(Rng& rng, OutcomeKind kind);

// The bundled real-world ORR layout (binary, historical control only).
TrialLayout orr_layout();

}  // namespace testing
}  // namespace bond
