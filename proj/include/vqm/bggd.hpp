#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <vector>

#include "vqm/field.hpp"
#include "vqm/steerable_pyramid.hpp"

namespace vqm {

// Bivariate generalized Gaussian parameters. Convention: trace(M) = 2, so
// the scatter matrix carries only shape and alpha carries all scale. Under
// this convention beta and M are invariant to rescaling the data while
// alpha picks up the squared scale factor.
struct BggdParams {
    double alpha = 1.0;                    // scale, > 0
    double beta = 1.0;                     // shape, clamped to [0.02, 5]
    Eigen::Matrix2d scatter = Eigen::Matrix2d::Identity();

    static constexpr double kBetaMin = 0.02;
    static constexpr double kBetaMax = 5.0;
};

struct BggdFit {
    BggdParams params;
    double chi = 0.0;        // histogram goodness of fit, >= 0
    int sample_count = 0;
};

// Paired coefficients of one (scale, orientation) subband of the motion and
// disparity pyramids, taken at co-located positions.
struct SubbandPairSample {
    int scale = 0;
    int orientation = 0;
    std::vector<Eigen::Vector2d> points;
};

inline constexpr int kMinFitPoints = 64;

// Density p(x | M, alpha, beta) = |M|^(-1/2) g(x' M^-1 x) with
// g(y) = beta Gamma(N/2) / ((2^(1/beta) pi alpha)^(N/2) Gamma(N/(2 beta)))
//        * exp(-(1/2) (y/alpha)^beta),  N = 2.
double bggd_density(const Eigen::Vector2d& x, const BggdParams& p);

// i.i.d. draws from the density via the elliptical representation
// x = R L u: u uniform on the circle, R^2 = alpha (2V)^(1/beta) with
// V ~ Gamma(1/beta), L the Cholesky factor of M. Deterministic per seed.
std::vector<Eigen::Vector2d> bggd_sample(const BggdParams& p, int n, uint64_t seed);

// Maximum-likelihood fit: fixed-point iteration for M at fixed beta
// (weighted covariance, renormalized to trace 2), profile search over beta
// on [0.02, 5] (coarse scan + golden section), alpha in closed form.
// Throws DegenerateFitError on rank-deficient or near-constant samples.
BggdFit bggd_fit(const SubbandPairSample& samples);

// chi = sum over bins of (h_emp - h_model)^2, where h_emp is the
// mass-normalized 2-D histogram over a symmetric support covering the
// central 99.5% of each marginal and h_model is density x bin area at the
// bin center. 32 bins per axis by default.
double bggd_chi_gof(const SubbandPairSample& samples, const BggdParams& p, int bins = 32);

// Per-frame BGGD feature block plus per-subband goodness of fit.
struct BggdFeatures {
    std::array<double, 18> alphas{};
    std::array<double, 18> betas{};
    std::array<double, 18> chis{};
    uint32_t degeneracy_mask = 0;   // bit k set when subband k was degenerate

    std::array<double, 36> concatenated() const {
        std::array<double, 36> out{};
        for (int i = 0; i < 18; ++i) {
            out[i] = alphas[i];
            out[18 + i] = betas[i];
        }
        return out;
    }
};

// Pairs co-located coefficients of the two pyramids at each of the 18
// canonical subband indices, fits a BGGD per subband and emits (alpha, beta)
// in canonical order. Degenerate subbands (near-constant or too few points)
// yield the (0, 0) sentinel and a flag bit instead of failing the frame.
BggdFeatures extract_bggd_features(const PyramidDecomposition& motion_pyr,
                                   const PyramidDecomposition& disp_pyr);

} // namespace vqm
