#pragma once

// Shared fixtures and independent oracles for the test suites. Everything
// here stays deliberately separate from the library's computation paths so
// it can serve as a cross-check.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "vqm/bggd.hpp"
#include "vqm/field.hpp"
#include "vqm/svr.hpp"

namespace vqm_test {

// Scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        dir_ = std::filesystem::temp_directory_path() /
               ("vqm_" + tag + "_" + std::to_string(::getpid()));
        std::filesystem::create_directories(dir_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(dir_, ec);
    }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }
    std::string root() const { return dir_.string(); }

private:
    std::filesystem::path dir_;
};

// Writes a raw YUV420P file; luma of frame t at (y, x) comes from the
// callback, chroma planes are filled with `chroma`.
template <typename LumaFn>
void write_yuv(const std::string& path, int width, int height, int frames, LumaFn luma,
               uint8_t chroma = 128) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    for (int t = 0; t < frames; ++t) {
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x) {
                const uint8_t v = luma(t, y, x);
                out.write(reinterpret_cast<const char*>(&v), 1);
            }
        const size_t csize = static_cast<size_t>(width / 2) * (height / 2);
        std::vector<char> c(csize, static_cast<char>(chroma));
        out.write(c.data(), static_cast<std::streamsize>(c.size())); // U
        out.write(c.data(), static_cast<std::streamsize>(c.size())); // V
    }
}

inline std::string manifest_line(const std::string& id, const std::string& left,
                                 const std::string& right, int w, int h, double fps, int frames,
                                 const std::string& dmos, const std::string& tag) {
    char buf[512];
    std::snprintf(buf, sizeof(buf), "%s\t%s\t%s\t%d\t%d\t%g\t%d\t%s\t%s", id.c_str(),
                  left.c_str(), right.c_str(), w, h, fps, frames, dmos.c_str(), tag.c_str());
    return buf;
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    out << text;
}

inline std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// ---------------------------------------------------------------------------
// BGGD oracles

// 2-D quadrature of the density in polar coordinates: Simpson along the
// radius, trapezoid around the circle (exact rule for periodic integrands).
// Radius grid resolves the center peak; rmax is chosen by the caller.
inline double bggd_mass_quadrature(const vqm::BggdParams& p, double rmax, int nr = 4096,
                                   int ntheta = 256) {
    if (nr % 2) ++nr;
    const double dr = rmax / nr;
    const double dt = 2.0 * M_PI / ntheta;
    double total = 0.0;
    for (int it = 0; it < ntheta; ++it) {
        const double theta = it * dt;
        const double cx = std::cos(theta), sy = std::sin(theta);
        double line = 0.0;
        for (int ir = 0; ir <= nr; ++ir) {
            const double r = ir * dr;
            const double f = r * vqm::bggd_density(Eigen::Vector2d(r * cx, r * sy), p);
            const double w = (ir == 0 || ir == nr) ? 1.0 : (ir % 2 ? 4.0 : 2.0);
            line += w * f;
        }
        total += line * dr / 3.0;
    }
    return total * dt;
}

// Radius beyond which the tail mass is negligible for the given parameters.
inline double bggd_support_radius(const vqm::BggdParams& p) {
    const double lam = 0.5 * (p.scatter(0, 0) + p.scatter(1, 1)) +
                       std::abs(p.scatter(0, 1)) + 1.0;
    return std::sqrt(p.alpha * std::pow(2.0 * 40.0, 1.0 / p.beta) * lam);
}

// ---------------------------------------------------------------------------
// Reference QP solver for the epsilon-SVR dual (independent of the SMO
// path): FISTA with projection onto the {0 <= a <= C, sum z a = 0} set.

namespace detail {

inline void project_box_hyperplane(std::vector<double>& a, const std::vector<double>& v,
                                   const std::vector<int>& z, double C) {
    double lo = -1e12, hi = 1e12;
    double vmax = 0.0;
    for (double x : v) vmax = std::max(vmax, std::abs(x));
    lo = -(vmax + C + 1.0);
    hi = vmax + C + 1.0;
    auto h = [&](double lambda) {
        double s = 0.0;
        for (size_t t = 0; t < v.size(); ++t) {
            const double val = std::clamp(v[t] - lambda * z[t], 0.0, C);
            s += z[t] * val;
        }
        return s;
    };
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (h(mid) > 0.0 ? lo : hi) = mid;
    }
    const double lambda = 0.5 * (lo + hi);
    for (size_t t = 0; t < v.size(); ++t) a[t] = std::clamp(v[t] - lambda * z[t], 0.0, C);
}

} // namespace detail

// Solves the dual on the normalized training set and returns beta.
inline std::vector<double> reference_svr_dual(const vqm::TrainingSet& norm, double C, double eps,
                                              double gamma, int iters = 40000) {
    const int n = static_cast<int>(norm.features.size());
    std::vector<double> K(static_cast<size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double d2 = 0.0;
            for (size_t d = 0; d < norm.features[i].size(); ++d) {
                const double diff = norm.features[i][d] - norm.features[j][d];
                d2 += diff * diff;
            }
            K[static_cast<size_t>(i) * n + j] = std::exp(-gamma * d2);
        }

    std::vector<int> z(2 * n);
    std::vector<double> p(2 * n);
    for (int i = 0; i < n; ++i) {
        z[i] = 1;
        z[n + i] = -1;
        p[i] = eps - norm.labels[i];
        p[n + i] = eps + norm.labels[i];
    }

    // Lipschitz bound via Gershgorin on the 2n quadratic form.
    double L = 0.0;
    for (int i = 0; i < n; ++i) {
        double row = 0.0;
        for (int j = 0; j < n; ++j) row += std::abs(K[static_cast<size_t>(i) * n + j]);
        L = std::max(L, 2.0 * row);
    }
    const double step = 1.0 / L;

    std::vector<double> a(2 * n, 0.0), y = a, prev = a, grad(2 * n), v(2 * n), f(n);
    double tk = 1.0;
    for (int it = 0; it < iters; ++it) {
        for (int k = 0; k < n; ++k) {
            double acc = 0.0;
            for (int j = 0; j < n; ++j)
                acc += K[static_cast<size_t>(k) * n + j] * (y[j] - y[n + j]);
            f[k] = acc;
        }
        for (int t = 0; t < 2 * n; ++t) grad[t] = z[t] * f[t < n ? t : t - n] + p[t];
        for (int t = 0; t < 2 * n; ++t) v[t] = y[t] - step * grad[t];
        prev = a;
        detail::project_box_hyperplane(a, v, z, C);
        const double tnext = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
        for (int t = 0; t < 2 * n; ++t) y[t] = a[t] + ((tk - 1.0) / tnext) * (a[t] - prev[t]);
        tk = tnext;
    }
    std::vector<double> beta(n);
    for (int i = 0; i < n; ++i) beta[i] = a[i] - a[n + i];
    return beta;
}

// KKT audit of a trained model against the data it was trained on, done
// from the model's stored coefficients alone.
inline double svr_kkt_violation(const vqm::SvrModel& model, const vqm::TrainingSet& raw) {
    std::vector<double> fx(raw.features.size());
    for (size_t i = 0; i < raw.features.size(); ++i)
        fx[i] = vqm::svr_predict(model, raw.features[i]) - model.bias;
    // reconstruct beta per training row by matching normalized rows to SVs
    std::vector<double> fmin, frange;
    const vqm::TrainingSet norm = vqm::svr_normalize(raw, fmin, frange);
    std::vector<double> beta(raw.features.size(), 0.0);
    for (size_t s = 0; s < model.support_vectors.size(); ++s) {
        for (size_t i = 0; i < norm.features.size(); ++i) {
            if (beta[i] != 0.0) continue;
            bool match = true;
            for (size_t d = 0; d < norm.features[i].size(); ++d)
                if (std::abs(norm.features[i][d] - model.support_vectors[s][d]) > 1e-12) {
                    match = false;
                    break;
                }
            if (match) {
                beta[i] = model.dual_coeffs[s];
                break;
            }
        }
    }
    double m_up = -1e300, m_low = 1e300;
    for (size_t i = 0; i < raw.features.size(); ++i) {
        const double v_plus = raw.labels[i] - fx[i] - model.epsilon;
        const double v_minus = raw.labels[i] - fx[i] + model.epsilon;
        const double ap = std::max(beta[i], 0.0);   // plus-side mass
        const double am = std::max(-beta[i], 0.0);  // minus-side mass
        if (ap < model.c) m_up = std::max(m_up, v_plus);
        if (am > 0.0) m_up = std::max(m_up, v_minus);
        if (ap > 0.0) m_low = std::min(m_low, v_plus);
        if (am < model.c) m_low = std::min(m_low, v_minus);
    }
    return m_up - m_low;
}

} // namespace vqm_test
