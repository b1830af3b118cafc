#include "vqm/steerable_pyramid.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <mutex>

namespace vqm {

namespace {

using Cx = std::complex<double>;

// FFTW plan creation is not thread-safe; execution of a fresh plan is.
std::mutex& fftw_mutex() {
    static std::mutex m;
    return m;
}

struct CxGrid {
    int rows = 0;
    int cols = 0;
    std::vector<Cx> data;
    CxGrid() = default;
    CxGrid(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c) {}
    Cx& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    const Cx& at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
};

void run_fft(CxGrid& g, int sign) {
    fftw_plan plan;
    auto* ptr = reinterpret_cast<fftw_complex*>(g.data.data());
    {
        std::lock_guard<std::mutex> lock(fftw_mutex());
        plan = fftw_plan_dft_2d(g.rows, g.cols, ptr, ptr, sign, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(fftw_mutex());
        fftw_destroy_plan(plan);
    }
    if (sign == FFTW_BACKWARD) {
        const double inv = 1.0 / (static_cast<double>(g.rows) * g.cols);
        for (auto& v : g.data) v *= inv;
    }
}

CxGrid fft2(const RealField& f) {
    CxGrid g(f.rows, f.cols);
    for (size_t i = 0; i < f.data.size(); ++i) g.data[i] = Cx(f.data[i], 0.0);
    run_fft(g, FFTW_FORWARD);
    return g;
}

RealField ifft2_real(CxGrid g) {
    run_fft(g, FFTW_BACKWARD);
    RealField out(g.rows, g.cols);
    for (size_t i = 0; i < g.data.size(); ++i) out.data[i] = g.data[i].real();
    return out;
}

// Signed frequency index for bin i of an n-point transform.
int signed_freq(int i, int n) { return i < (n + 1) / 2 ? i : i - n; }

// Raised-cosine octave transition on log2 radius: 1 below r0/2, 0 above r0.
double lowpass_win(double r, double r0) {
    if (r <= r0 / 2.0) return 1.0;
    if (r >= r0) return 0.0;
    return std::cos(M_PI_2 * std::log2(2.0 * r / r0));
}

double highpass_win(double r, double r0) {
    if (r <= r0 / 2.0) return 0.0;
    if (r >= r0) return 1.0;
    return std::sin(M_PI_2 * std::log2(2.0 * r / r0));
}

// Per-level mask set over one grid. h0 (outermost octave highpass) exists
// only at level 1, where its lowpass complement is folded into band/low;
// band/low realize the inner octave split.
struct LevelMasks {
    RealField h0;
    std::vector<RealField> band; // one per orientation, includes angular part
    RealField low;
};

LevelMasks make_masks(int rows, int cols, int orientations, bool top_level) {
    LevelMasks m;
    m.band.assign(orientations, RealField(rows, cols));
    m.low = RealField(rows, cols);
    if (top_level) m.h0 = RealField(rows, cols);
    // Angular normalization: sum_k a^2 |cos(t - t_k)|^(2K-2) == 1.
    const int K = orientations;
    double binom = 1.0;
    for (int i = 1; i <= K - 1; ++i) binom = binom * (K - 1 + i) / i; // C(2K-2, K-1)
    const double a = std::pow(2.0, K - 1) / std::sqrt(K * binom);

    for (int i = 0; i < rows; ++i) {
        const double wy = 2.0 * M_PI * signed_freq(i, rows) / rows;
        for (int j = 0; j < cols; ++j) {
            const double wx = 2.0 * M_PI * signed_freq(j, cols) / cols;
            const double r = std::hypot(wx, wy);
            const double theta = std::atan2(wy, wx);
            double outer = 1.0;
            if (top_level) {
                m.h0.at(i, j) = highpass_win(r, M_PI);
                outer = lowpass_win(r, M_PI);
            }
            const double hb = highpass_win(r, M_PI_2);
            const double lb = lowpass_win(r, M_PI_2);
            m.low.at(i, j) = outer * lb;
            for (int k = 0; k < K; ++k) {
                const double ang = a * std::pow(std::abs(std::cos(theta - k * M_PI / K)), K - 1);
                m.band[k].at(i, j) = outer * hb * ang;
            }
        }
    }
    return m;
}

CxGrid apply_mask(const CxGrid& g, const RealField& mask) {
    CxGrid out(g.rows, g.cols);
    for (size_t i = 0; i < g.data.size(); ++i) out.data[i] = g.data[i] * mask.data[i];
    return out;
}

// Frequency-domain downsample by 2: keeps the centered half-band box. The
// 0.5 factor preserves sum-of-squares energy across the decimation.
CxGrid crop_half(const CxGrid& g) {
    CxGrid out(g.rows / 2, g.cols / 2);
    for (int i = 0; i < out.rows; ++i) {
        const int si = (signed_freq(i, out.rows) + g.rows) % g.rows;
        for (int j = 0; j < out.cols; ++j) {
            const int sj = (signed_freq(j, out.cols) + g.cols) % g.cols;
            out.at(i, j) = 0.5 * g.at(si, sj);
        }
    }
    return out;
}

// Inverse of crop_half: zero-embed the small spectrum scaled back up.
CxGrid embed_double(const CxGrid& g, int rows, int cols) {
    CxGrid out(rows, cols);
    for (int i = 0; i < g.rows; ++i) {
        const int di = (signed_freq(i, g.rows) + rows) % rows;
        for (int j = 0; j < g.cols; ++j) {
            const int dj = (signed_freq(j, g.cols) + cols) % cols;
            out.at(di, dj) = 2.0 * g.at(i, j);
        }
    }
    return out;
}

RealField pad_even(const RealField& f, int pr, int pc) {
    if (pr == f.rows && pc == f.cols) return f;
    RealField out(pr, pc, 0.0);
    for (int i = 0; i < f.rows; ++i)
        for (int j = 0; j < f.cols; ++j) out.at(i, j) = f.at(i, j);
    return out;
}

RealField crop_to(const RealField& f, int r, int c) {
    if (r == f.rows && c == f.cols) return f;
    RealField out(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) out.at(i, j) = f.at(i, j);
    return out;
}

} // namespace

RealField PyramidDecomposition::subband(int scale, int orientation) const {
    const auto& b = band(scale, orientation);
    const auto [r, c] = logical_dims[scale - 1];
    return crop_to(b, r, c);
}

PyramidDecomposition decompose(const RealField& field, int scales, int orientations) {
    if (scales < 1 || orientations < 2)
        throw ValidationError("pyramid: need >= 1 scale and >= 2 orientations");
    if (field.rows < 16 || field.cols < 16)
        throw ValidationError("pyramid: field must be at least 16x16");
    for (double v : field.data)
        if (!std::isfinite(v)) throw ValidationError("pyramid: non-finite input");

    PyramidDecomposition p;
    p.scales = scales;
    p.orientations = orientations;
    p.input_rows = field.rows;
    p.input_cols = field.cols;
    p.bands.resize(static_cast<size_t>(scales) * orientations);

    RealField cur = field;
    for (int s = 1; s <= scales; ++s) {
        p.logical_dims.emplace_back(cur.rows, cur.cols);
        const bool will_downsample = s < scales;
        int pr = cur.rows, pc = cur.cols;
        if (will_downsample) {
            pr += pr % 2;
            pc += pc % 2;
        }
        const RealField padded = pad_even(cur, pr, pc);
        const LevelMasks masks = make_masks(pr, pc, orientations, s == 1);

        // The band and low masks already carry the outer (l0) factor at the
        // top level, so every mask is applied to the raw spectrum exactly
        // once.
        const CxGrid F = fft2(padded);
        if (s == 1) p.residual_high = ifft2_real(apply_mask(F, masks.h0));
        for (int k = 0; k < orientations; ++k)
            p.bands[p.flat_index(s, k)] = ifft2_real(apply_mask(F, masks.band[k]));
        if (will_downsample) {
            cur = ifft2_real(crop_half(apply_mask(F, masks.low)));
        } else {
            p.residual_low = ifft2_real(apply_mask(F, masks.low));
        }
    }
    return p;
}

RealField reconstruct(const PyramidDecomposition& p) {
    if (p.bands.empty() || p.logical_dims.empty())
        throw ValidationError("reconstruct: missing subbands");
    for (const auto& b : p.bands)
        if (b.rows == 0) throw ValidationError("reconstruct: missing subbands");

    CxGrid G; // spectrum of the current level's (padded) input
    for (int s = p.scales; s >= 1; --s) {
        const auto [lr, lc] = p.logical_dims[s - 1];
        const bool downsampled = s < p.scales;
        int pr = lr, pc = lc;
        if (downsampled) {
            pr += pr % 2;
            pc += pc % 2;
        }
        const LevelMasks masks = make_masks(pr, pc, p.orientations, s == 1);

        CxGrid acc(pr, pc);
        if (s == p.scales) {
            acc = apply_mask(fft2(p.residual_low), masks.low);
        } else {
            // G holds the reconstructed spectrum of level s+1's padded grid;
            // crop its spatial field to the logical size, then re-embed as
            // the decimated lowpass branch of this level.
            RealField next = ifft2_real(G);
            const auto [nr, nc] = p.logical_dims[s];
            next = crop_to(next, nr, nc);
            acc = apply_mask(embed_double(fft2(next), pr, pc), masks.low);
        }
        for (int k = 0; k < p.orientations; ++k) {
            CxGrid bf = fft2(p.bands[p.flat_index(s, k)]);
            CxGrid masked = apply_mask(bf, masks.band[k]);
            for (size_t i = 0; i < acc.data.size(); ++i) acc.data[i] += masked.data[i];
        }
        if (s == 1) {
            CxGrid hf = apply_mask(fft2(p.residual_high), masks.h0);
            for (size_t i = 0; i < acc.data.size(); ++i) acc.data[i] += hf.data[i];
        }
        G = std::move(acc);
    }
    RealField out = ifft2_real(G);
    return crop_to(out, p.input_rows, p.input_cols);
}

} // namespace vqm
