#pragma once

#include <string>
#include <vector>

#include "vqm/error.hpp"

namespace vqm {

// Frame-level training rows plus the per-dimension min-max constants that
// rescale features to [0, 1]. Constants always come from training rows only.
struct TrainingSet {
    std::vector<std::vector<double>> features;
    std::vector<double> labels;
};

struct SvrParams {
    double c = 100.0;
    double epsilon = -1.0; // < 0: use 0.1 * label standard deviation
    double gamma = -1.0;   // < 0: use 1 / (dim * mean feature variance)
    double tol = 1e-3;
};

// Trained epsilon-SVR with RBF kernel. Support vectors are stored in
// normalized feature space.
struct SvrModel {
    int dim = 0;
    double c = 0.0;
    double epsilon = 0.0;
    double gamma = 0.0;
    double bias = 0.0;
    std::vector<double> feat_min;            // per-dimension normalization
    std::vector<double> feat_range;          // max - min, 0 for constant dims
    std::vector<std::vector<double>> support_vectors;
    std::vector<double> dual_coeffs;         // in [-C, C]
    bool degenerate = false;                 // constant-label training set
    double kkt_gap = 0.0;                    // final working-set violation
};

// Trains by sequential optimization of the dual: maximal-violating-pair
// working-set selection (deterministic, lowest index on ties), analytic
// two-variable updates, stop when the KKT violation drops below tol.
SvrModel svr_train(const TrainingSet& data, const SvrParams& params = {});

double svr_predict(const SvrModel& model, const std::vector<double>& features);

// Versioned, checksummed text format with 17-significant-digit encoding.
void svr_save(const std::string& path, const SvrModel& model);
SvrModel svr_load(const std::string& path);

// Dual objective value (minimization form) of coefficient vector `beta`
// for the given data and hyperparameters; shared by tests that compare the
// trained solution against an independent solver.
double svr_dual_objective(const TrainingSet& normalized, double epsilon, double gamma,
                          const std::vector<double>& beta);

// Normalization applied by training; exposed so oracles can work in the
// exact feature space the solver saw.
TrainingSet svr_normalize(const TrainingSet& data, std::vector<double>& feat_min,
                          std::vector<double>& feat_range);

} // namespace vqm
