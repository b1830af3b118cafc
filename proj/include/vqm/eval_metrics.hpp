#pragma once

#include <vector>

#include "vqm/error.hpp"

namespace vqm {

// 4-parameter logistic transform applied to objective scores before
// correlation: f(x) = (tau1 - tau2) / (1 + exp((x - tau3) / |tau4|)) + tau2.
struct LogisticParams {
    double tau1 = 0.0;
    double tau2 = 0.0;
    double tau3 = 0.0;
    double tau4 = 1.0;
};

double logistic(double x, const LogisticParams& p);

// Least-squares fit of the logistic to (objective, dmos) pairs by
// Nelder-Mead simplex descent. Initialization: tau1 = max(dmos),
// tau2 = min(dmos), tau3 = median(objective), tau4 = std(objective).
// Converges when the simplex SSE spread falls below 1e-10 relative or after
// 2000 iterations. Requires >= 5 pairs and non-constant objective scores.
LogisticParams fit_logistic(const std::vector<double>& objective,
                            const std::vector<double>& dmos);

// Pearson linear correlation; requires nonzero variance on both sides.
double lcc(const std::vector<double>& a, const std::vector<double>& b);

// Spearman rank correlation with average ranks for ties.
double srocc(const std::vector<double>& a, const std::vector<double>& b);

double rmse(const std::vector<double>& a, const std::vector<double>& b);

} // namespace vqm
