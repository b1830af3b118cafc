#include "vqm/bggd.hpp"

#include <algorithm>
#include <cmath>

#include "vqm/rng.hpp"

namespace vqm {

namespace {

void check_params(const BggdParams& p) {
    if (!(p.alpha > 0.0) || !std::isfinite(p.alpha)) throw ValidationError("bggd: alpha must be positive");
    if (!(p.beta > 0.0) || !std::isfinite(p.beta)) throw ValidationError("bggd: beta must be positive");
    if (std::abs(p.scatter(0, 1) - p.scatter(1, 0)) > 1e-12)
        throw ValidationError("bggd: scatter matrix must be symmetric");
}

// log of the N=2 density generator normalizer:
// beta / (2^(1/beta) pi alpha Gamma(1/beta)).
double log_norm_const(double alpha, double beta) {
    return std::log(beta) - std::log(2.0) / beta - std::log(M_PI) - std::log(alpha) -
           std::lgamma(1.0 / beta);
}

} // namespace

double bggd_density(const Eigen::Vector2d& x, const BggdParams& p) {
    check_params(p);
    if (!x.allFinite()) throw ValidationError("bggd_density: non-finite point");
    const double det = p.scatter.determinant();
    if (!(det > 0.0)) throw ValidationError("bggd_density: singular scatter matrix");
    Eigen::Matrix2d inv;
    inv << p.scatter(1, 1), -p.scatter(0, 1), -p.scatter(1, 0), p.scatter(0, 0);
    inv /= det;
    const double y = x.dot(inv * x);
    const double logp = -0.5 * std::log(det) + log_norm_const(p.alpha, p.beta) -
                        0.5 * std::pow(y / p.alpha, p.beta);
    return std::exp(logp);
}

std::vector<Eigen::Vector2d> bggd_sample(const BggdParams& p, int n, uint64_t seed) {
    check_params(p);
    const double det = p.scatter.determinant();
    if (!(det > 0.0)) throw ValidationError("bggd_sample: singular scatter matrix");
    // 2x2 Cholesky factor L with L L' = M.
    const double l00 = std::sqrt(p.scatter(0, 0));
    const double l10 = p.scatter(1, 0) / l00;
    const double l11 = std::sqrt(p.scatter(1, 1) - l10 * l10);

    Rng rng(seed);
    std::vector<Eigen::Vector2d> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
        const double v = rng.gamma(1.0 / p.beta);
        const double radius = std::sqrt(p.alpha * std::pow(2.0 * v, 1.0 / p.beta));
        const double ang = 2.0 * M_PI * rng.uniform();
        const double zx = radius * std::cos(ang);
        const double zy = radius * std::sin(ang);
        out.emplace_back(l00 * zx, l10 * zx + l11 * zy);
    }
    return out;
}

namespace {

// One profile-likelihood evaluation at fixed beta: fixed-point iteration for
// the trace-2 scatter matrix, then alpha from its ML closed form. Returns
// the log-likelihood (up to constants in n) and the fitted (alpha, M).
struct ProfileResult {
    double loglik = -std::numeric_limits<double>::infinity();
    double alpha = 1.0;
    Eigen::Matrix2d scatter = Eigen::Matrix2d::Identity();
};

ProfileResult profile_at_beta(const std::vector<Eigen::Vector2d>& pts, double beta,
                              const Eigen::Matrix2d& m_init) {
    const int n = static_cast<int>(pts.size());
    Eigen::Matrix2d m = m_init;
    std::vector<double> y(n);
    const double y_floor = 1e-15 * (m_init(0, 0) + m_init(1, 1));

    auto compute_y = [&](const Eigen::Matrix2d& mm) {
        const double det = mm.determinant();
        const double i00 = mm(1, 1) / det, i01 = -mm(0, 1) / det, i11 = mm(0, 0) / det;
        for (int i = 0; i < n; ++i) {
            const double a = pts[i].x(), b = pts[i].y();
            y[i] = std::max(i00 * a * a + 2.0 * i01 * a * b + i11 * b * b, y_floor);
        }
    };

    for (int iter = 0; iter < 200; ++iter) {
        compute_y(m);
        double s00 = 0, s01 = 0, s11 = 0;
        for (int i = 0; i < n; ++i) {
            const double w = std::pow(y[i], beta - 1.0);
            const double a = pts[i].x(), b = pts[i].y();
            s00 += w * a * a;
            s01 += w * a * b;
            s11 += w * b * b;
        }
        const double tr = s00 + s11;
        if (!(tr > 0.0) || !std::isfinite(tr)) return {};
        Eigen::Matrix2d next;
        next << 2.0 * s00 / tr, 2.0 * s01 / tr, 2.0 * s01 / tr, 2.0 * s11 / tr;
        const double delta = (next - m).cwiseAbs().maxCoeff();
        m = next;
        if (delta < 1e-6) break;
    }
    const double det = m.determinant();
    if (!(det > 1e-12)) return {};

    compute_y(m);
    double sum_yb = 0.0;
    for (int i = 0; i < n; ++i) sum_yb += std::pow(y[i], beta);
    if (!(sum_yb > 0.0) || !std::isfinite(sum_yb)) return {};
    const double alpha = std::pow(beta * sum_yb / (2.0 * n), 1.0 / beta);

    ProfileResult res;
    res.alpha = alpha;
    res.scatter = m;
    // ln L / n, dropping nothing that depends on beta or M:
    // -(1/2)ln|M| + ln beta - ln2/beta - ln pi - lnGamma(1/beta) - ln alpha - 1/beta
    res.loglik = -0.5 * std::log(det) + log_norm_const(alpha, beta) - 1.0 / beta;
    return res;
}

} // namespace

BggdFit bggd_fit(const SubbandPairSample& samples) {
    const auto& pts = samples.points;
    const int n = static_cast<int>(pts.size());
    if (n < kMinFitPoints)
        throw DegenerateFitError("bggd_fit: need at least " + std::to_string(kMinFitPoints) +
                                 " points, got " + std::to_string(n));
    double s00 = 0, s01 = 0, s11 = 0;
    for (const auto& p : pts) {
        if (!p.allFinite()) throw ValidationError("bggd_fit: non-finite sample point");
        s00 += p.x() * p.x();
        s01 += p.x() * p.y();
        s11 += p.y() * p.y();
    }
    s00 /= n;
    s01 /= n;
    s11 /= n;
    const double det = s00 * s11 - s01 * s01;
    if (s00 <= 1e-12 || s11 <= 1e-12 || det <= 1e-9 * s00 * s11)
        throw DegenerateFitError("bggd_fit: degenerate (near-constant or fully correlated) sample");

    Eigen::Matrix2d m_init;
    m_init << s00, s01, s01, s11;
    m_init *= 2.0 / (s00 + s11);

    auto eval = [&](double beta) { return profile_at_beta(pts, beta, m_init); };

    // Coarse log-spaced scan to bracket the profile-likelihood peak, then
    // golden-section refinement inside the bracket.
    constexpr int kCoarse = 13;
    double best_beta = 1.0;
    double best_ll = -std::numeric_limits<double>::infinity();
    std::array<double, kCoarse> grid{};
    for (int i = 0; i < kCoarse; ++i) {
        const double t = static_cast<double>(i) / (kCoarse - 1);
        grid[i] = BggdParams::kBetaMin *
                  std::pow(BggdParams::kBetaMax / BggdParams::kBetaMin, t);
    }
    int best_i = 0;
    for (int i = 0; i < kCoarse; ++i) {
        const double ll = eval(grid[i]).loglik;
        if (ll > best_ll) {
            best_ll = ll;
            best_beta = grid[i];
            best_i = i;
        }
    }
    double lo = grid[std::max(0, best_i - 1)];
    double hi = grid[std::min(kCoarse - 1, best_i + 1)];

    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    double f1 = eval(x1).loglik, f2 = eval(x2).loglik;
    while (hi - lo > 1e-3) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = eval(x2).loglik;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = eval(x1).loglik;
        }
    }
    const double refined = 0.5 * (lo + hi);
    if (eval(refined).loglik > best_ll) best_beta = refined;

    ProfileResult final_fit = eval(best_beta);
    if (!std::isfinite(final_fit.loglik))
        throw DegenerateFitError("bggd_fit: likelihood evaluation failed");

    BggdFit fit;
    fit.params.alpha = final_fit.alpha;
    fit.params.beta = std::clamp(best_beta, BggdParams::kBetaMin, BggdParams::kBetaMax);
    fit.params.scatter = final_fit.scatter;
    fit.sample_count = n;
    fit.chi = bggd_chi_gof(samples, fit.params);
    return fit;
}

double bggd_chi_gof(const SubbandPairSample& samples, const BggdParams& p, int bins) {
    check_params(p);
    if (samples.points.empty()) throw ValidationError("bggd_chi_gof: empty sample");
    if (bins < 8) throw ValidationError("bggd_chi_gof: need at least 8 bins per axis");

    auto half_width = [&](int axis) {
        std::vector<double> mags(samples.points.size());
        for (size_t i = 0; i < samples.points.size(); ++i)
            mags[i] = std::abs(samples.points[i][axis]);
        const size_t k = static_cast<size_t>(0.995 * (mags.size() - 1));
        std::nth_element(mags.begin(), mags.begin() + k, mags.end());
        return std::max(mags[k], 1e-12);
    };
    const double lx = half_width(0);
    const double ly = half_width(1);
    const double wx = 2.0 * lx / bins;
    const double wy = 2.0 * ly / bins;

    std::vector<double> emp(static_cast<size_t>(bins) * bins, 0.0);
    long counted = 0;
    for (const auto& pt : samples.points) {
        if (std::abs(pt.x()) > lx || std::abs(pt.y()) > ly) continue;
        const int bx = std::min(bins - 1, static_cast<int>((pt.x() + lx) / wx));
        const int by = std::min(bins - 1, static_cast<int>((pt.y() + ly) / wy));
        emp[static_cast<size_t>(by) * bins + bx] += 1.0;
        ++counted;
    }
    if (counted == 0) throw ValidationError("bggd_chi_gof: no points inside histogram support");
    for (auto& v : emp) v /= counted;

    double chi = 0.0;
    const double area = wx * wy;
    for (int by = 0; by < bins; ++by) {
        const double cy = -ly + (by + 0.5) * wy;
        for (int bx = 0; bx < bins; ++bx) {
            const double cx = -lx + (bx + 0.5) * wx;
            const double model = bggd_density(Eigen::Vector2d(cx, cy), p) * area;
            const double d = emp[static_cast<size_t>(by) * bins + bx] - model;
            chi += d * d;
        }
    }
    return chi;
}

BggdFeatures extract_bggd_features(const PyramidDecomposition& motion_pyr,
                                   const PyramidDecomposition& disp_pyr) {
    if (motion_pyr.scales != disp_pyr.scales ||
        motion_pyr.orientations != disp_pyr.orientations)
        throw ValidationError("extract_bggd_features: pyramid geometry mismatch");
    if (motion_pyr.scales * motion_pyr.orientations != 18)
        throw ValidationError("extract_bggd_features: expected 3 scales x 6 orientations");

    BggdFeatures out;
    for (int s = 1; s <= motion_pyr.scales; ++s) {
        for (int k = 0; k < motion_pyr.orientations; ++k) {
            const int idx = motion_pyr.flat_index(s, k);
            RealField a = motion_pyr.subband(s, k);
            RealField b = disp_pyr.subband(s, k);
            // Center-crop to the common shape if the odd-padding rule left
            // the two grids a row or column apart.
            const int rows = std::min(a.rows, b.rows);
            const int cols = std::min(a.cols, b.cols);

            SubbandPairSample sample;
            sample.scale = s;
            sample.orientation = k;
            sample.points.reserve(static_cast<size_t>(rows) * cols);
            const int ar0 = (a.rows - rows) / 2, ac0 = (a.cols - cols) / 2;
            const int br0 = (b.rows - rows) / 2, bc0 = (b.cols - cols) / 2;
            for (int r = 0; r < rows; ++r)
                for (int c = 0; c < cols; ++c)
                    sample.points.emplace_back(a.at(ar0 + r, ac0 + c), b.at(br0 + r, bc0 + c));

            try {
                BggdFit fit = bggd_fit(sample);
                out.alphas[idx] = fit.params.alpha;
                out.betas[idx] = fit.params.beta;
                out.chis[idx] = fit.chi;
            } catch (const DegenerateFitError&) {
                out.alphas[idx] = 0.0;
                out.betas[idx] = 0.0;
                out.chis[idx] = 0.0;
                out.degeneracy_mask |= (1u << idx);
            }
        }
    }
    return out;
}

} // namespace vqm
