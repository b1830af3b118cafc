#include <doctest.h>

#include <cmath>

#include "support/helpers.hpp"
#include "vqm/bggd.hpp"
#include "vqm/rng.hpp"
#include "vqm/steerable_pyramid.hpp"

using namespace vqm;
using namespace vqm_test;

namespace {

BggdParams params(double alpha, double beta, double m00 = 1, double m01 = 0, double m11 = 1) {
    BggdParams p;
    p.alpha = alpha;
    p.beta = beta;
    p.scatter << m00, m01, m01, m11;
    return p;
}

SubbandPairSample as_sample(std::vector<Eigen::Vector2d> pts) {
    SubbandPairSample s;
    s.points = std::move(pts);
    return s;
}

} // namespace

TEST_CASE("density closed forms at the origin") {
    // beta = 1 reduces to the standard bivariate Gaussian
    CHECK(bggd_density(Eigen::Vector2d(0, 0), params(1, 1)) ==
          doctest::Approx(1.0 / (2.0 * M_PI)).epsilon(1e-12));
    // beta = 0.5: 0.5 * Gamma(1) / ((4 pi) Gamma(2)) = 1 / (8 pi)
    CHECK(bggd_density(Eigen::Vector2d(0, 0), params(1, 0.5)) ==
          doctest::Approx(1.0 / (8.0 * M_PI)).epsilon(1e-12));
}

TEST_CASE("density integrates to one for a grid of shapes and scales") {
    for (double beta : {0.5, 1.0, 2.0})
        for (double alpha : {0.5, 1.0, 2.0}) {
            const BggdParams p = params(alpha, beta);
            const double mass = bggd_mass_quadrature(p, bggd_support_radius(p));
            CHECK(mass == doctest::Approx(1.0).epsilon(1e-4));
        }
}

TEST_CASE("density is even and respects a general scatter matrix") {
    const BggdParams p = params(0.8, 0.7, 1.3, 0.4, 0.7);
    Rng rng(3);
    for (int i = 0; i < 50; ++i) {
        const Eigen::Vector2d x(rng.normal() * 2.0, rng.normal() * 2.0);
        CHECK(bggd_density(x, p) == doctest::Approx(bggd_density(-x, p)).epsilon(1e-14));
    }
    const double mass = bggd_mass_quadrature(p, bggd_support_radius(p));
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("beta = 1 equals the bivariate normal with covariance alpha M") {
    const BggdParams p = params(0.9, 1.0, 1.2, -0.3, 0.8);
    const Eigen::Matrix2d sigma = p.alpha * p.scatter;
    const Eigen::Matrix2d inv = sigma.inverse();
    const double norm = 1.0 / (2.0 * M_PI * std::sqrt(sigma.determinant()));
    Rng rng(4);
    for (int i = 0; i < 100; ++i) {
        const Eigen::Vector2d x(rng.normal(), rng.normal());
        const double expected = norm * std::exp(-0.5 * x.dot(inv * x));
        CHECK(bggd_density(x, p) == doctest::Approx(expected).epsilon(1e-10));
    }
}

TEST_CASE("sampling matches the Gaussian special case and is deterministic") {
    const BggdParams p = params(1.0, 1.0);
    auto pts = bggd_sample(p, 100000, 11);
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    for (const auto& x : pts) cov += x * x.transpose();
    cov /= double(pts.size());
    CHECK(cov(0, 0) == doctest::Approx(1.0).epsilon(0.05));
    CHECK(cov(1, 1) == doctest::Approx(1.0).epsilon(0.05));
    CHECK(std::abs(cov(0, 1)) < 0.05);

    auto again = bggd_sample(p, 1000, 11);
    for (int i = 0; i < 1000; ++i) {
        CHECK(again[i].x() == pts[i].x());
        CHECK(again[i].y() == pts[i].y());
    }
}

TEST_CASE("beta below one produces heavier-than-Gaussian marginals") {
    auto pts = bggd_sample(params(1.0, 0.5), 100000, 13);
    double m2 = 0, m4 = 0;
    for (const auto& x : pts) {
        m2 += x.x() * x.x();
        m4 += x.x() * x.x() * x.x() * x.x();
    }
    m2 /= pts.size();
    m4 /= pts.size();
    CHECK(m4 / (m2 * m2) > 3.5); // Gaussian kurtosis is 3
}

TEST_CASE("fit recovers the generating parameters") {
    for (double beta : {0.5, 1.0, 2.0}) {
        const BggdParams truth = params(1.0, beta);
        BggdFit fit = bggd_fit(as_sample(bggd_sample(truth, 100000, 17)));
        CHECK(fit.params.beta == doctest::Approx(beta).epsilon(0.15));
        CHECK(fit.params.scatter.trace() == doctest::Approx(2.0).epsilon(1e-9));
        CHECK(fit.params.scatter(0, 0) == doctest::Approx(1.0).epsilon(0.05));
        CHECK(std::abs(fit.params.scatter(0, 1)) < 0.05);
        CHECK(fit.sample_count == 100000);
        CHECK(fit.chi >= 0.0);
    }
}

TEST_CASE("fit is scale equivariant under the trace-2 convention") {
    auto pts = bggd_sample(params(1.0, 0.8, 1.1, 0.2, 0.9), 20000, 23);
    BggdFit base = bggd_fit(as_sample(pts));
    for (auto& x : pts) x *= 3.0;
    BggdFit scaled = bggd_fit(as_sample(pts));
    CHECK(scaled.params.beta == doctest::Approx(base.params.beta).epsilon(1e-6));
    CHECK(scaled.params.alpha == doctest::Approx(9.0 * base.params.alpha).epsilon(1e-6));
    CHECK(scaled.params.scatter(0, 0) ==
          doctest::Approx(base.params.scatter(0, 0)).epsilon(1e-9));
    CHECK(scaled.params.scatter(0, 1) ==
          doctest::Approx(base.params.scatter(0, 1)).epsilon(1e-9));
}

TEST_CASE("degenerate samples raise an explicit error, never NaN") {
    // too few points
    CHECK_THROWS_AS(bggd_fit(as_sample({Eigen::Vector2d(1, 2)})), DegenerateFitError);
    // constant coordinate
    std::vector<Eigen::Vector2d> flat(200, Eigen::Vector2d(0.0, 1.0));
    Rng rng(5);
    for (auto& x : flat) x.y() = rng.normal();
    CHECK_THROWS_AS(bggd_fit(as_sample(flat)), DegenerateFitError);
    // perfectly correlated coordinates
    std::vector<Eigen::Vector2d> corr;
    for (int i = 0; i < 200; ++i) {
        const double v = rng.normal();
        corr.emplace_back(v, 2.0 * v);
    }
    CHECK_THROWS_AS(bggd_fit(as_sample(corr)), DegenerateFitError);
}

TEST_CASE("chi goodness of fit separates right from wrong shapes") {
    const BggdParams truth = params(1.0, 1.0);
    auto sample = as_sample(bggd_sample(truth, 100000, 29));
    const double self_fit = bggd_chi_gof(sample, truth);
    CHECK(self_fit < 1e-3);
    const double wrong = bggd_chi_gof(sample, params(1.0, 0.3));
    CHECK(wrong >= 10.0 * self_fit);
    CHECK_THROWS_AS(bggd_chi_gof(as_sample({}), truth), ValidationError);
}

TEST_CASE("feature extraction pairs subbands and flags degeneracy") {
    Rng rng(31);
    RealField m(40, 32), d(40, 32);
    for (auto& v : m.data) v = rng.normal();
    for (auto& v : d.data) v = rng.normal();
    PyramidDecomposition pm = decompose(m);
    PyramidDecomposition pd = decompose(d);

    // identical pyramids: correlation 1 at every subband drives the fit
    // degenerate and must yield sentinels, not a failure
    BggdFeatures self = extract_bggd_features(pm, pm);
    CHECK(self.degeneracy_mask != 0);
    for (int i = 0; i < 18; ++i) {
        if (self.degeneracy_mask & (1u << i)) {
            CHECK(self.alphas[i] == 0.0);
            CHECK(self.betas[i] == 0.0);
        }
    }

    // independent noise: scatter off-diagonals should be near zero; check
    // via a direct fit of one subband pairing
    SubbandPairSample pair;
    RealField a = pm.subband(1, 0), b = pd.subband(1, 0);
    for (int i = 0; i < a.rows * a.cols; ++i)
        pair.points.emplace_back(a.data[i], b.data[i]);
    BggdFit fit = bggd_fit(pair);
    CHECK(std::abs(fit.params.scatter(0, 1)) < 0.1);

    // consolidated output is always 36 long, alphas then betas
    BggdFeatures indep = extract_bggd_features(pm, pd);
    auto flat = indep.concatenated();
    CHECK(flat.size() == 36);
    for (int i = 0; i < 18; ++i) {
        CHECK(flat[i] == indep.alphas[i]);
        CHECK(flat[18 + i] == indep.betas[i]);
    }

    // geometry mismatch is rejected
    RealField small(24, 24);
    for (auto& v : small.data) v = rng.normal();
    // same scales/orientations but different grids is fine; mismatched
    // pyramid shapes (scales) are not
    PyramidDecomposition p2 = decompose(small, 2, 6);
    CHECK_THROWS_AS(extract_bggd_features(pm, p2), ValidationError);
}
