#include "vqm/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "vqm/rng.hpp"

namespace fs = std::filesystem;

namespace vqm {

namespace {

int wrap(int v, int n) {
    v %= n;
    return v < 0 ? v + n : v;
}

uint8_t clamp_u8(double v) {
    return static_cast<uint8_t>(std::clamp(v, 0.0, 255.0));
}

// Separable wrap-around convolution with a [1 2 1]/4 kernel, applied twice
// per axis. Keeps the spectrum band-limited enough for well-posed matching.
void smooth_wrap(std::vector<double>& f, int w, int h) {
    std::vector<double> tmp(f.size());
    for (int pass = 0; pass < 2; ++pass) {
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                tmp[y * w + x] = 0.25 * f[y * w + wrap(x - 1, w)] + 0.5 * f[y * w + x] +
                                 0.25 * f[y * w + wrap(x + 1, w)];
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                f[y * w + x] = 0.25 * tmp[wrap(y - 1, h) * w + x] + 0.5 * tmp[y * w + x] +
                               0.25 * tmp[wrap(y + 1, h) * w + x];
    }
}

void apply_blur(LumaPlane& p, double sigma) {
    if (sigma <= 0.0) return;
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> kernel(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        kernel[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
        sum += kernel[i + radius];
    }
    for (auto& k : kernel) k /= sum;

    const int w = p.cols, h = p.rows;
    std::vector<double> a(p.data.begin(), p.data.end()), b(a.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) acc += kernel[i + radius] * a[y * w + wrap(x + i, w)];
            b[y * w + x] = acc;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) acc += kernel[i + radius] * b[wrap(y + i, h) * w + x];
            p.at(y, x) = clamp_u8(std::round(acc));
        }
}

void apply_noise(LumaPlane& p, double sigma, uint64_t seed) {
    if (sigma <= 0.0) return;
    Rng rng(seed);
    for (auto& v : p.data) v = clamp_u8(std::round(v + sigma * rng.normal()));
}

// Orthonormal 8x8 DCT-II basis, computed once.
const double* dct8_basis() {
    static double c[8][8];
    static bool init = [] {
        for (int k = 0; k < 8; ++k)
            for (int n = 0; n < 8; ++n)
                c[k][n] = (k == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0)) *
                          std::cos(M_PI * (2 * n + 1) * k / 16.0);
        return true;
    }();
    (void)init;
    return &c[0][0];
}

// Per-8x8 DCT coefficient quantization with a uniform step. Partial edge
// tiles are left untouched.
void apply_blockiness(LumaPlane& p, double step) {
    if (step <= 0.0) return;
    const double* c = dct8_basis();
    auto C = [&](int k, int n) { return c[k * 8 + n]; };
    for (int by = 0; by + 8 <= p.rows; by += 8) {
        for (int bx = 0; bx + 8 <= p.cols; bx += 8) {
            double blk[8][8], tmp[8][8];
            for (int y = 0; y < 8; ++y)
                for (int x = 0; x < 8; ++x) blk[y][x] = p.at(by + y, bx + x);
            // rows then columns, forward
            for (int y = 0; y < 8; ++y)
                for (int k = 0; k < 8; ++k) {
                    double acc = 0.0;
                    for (int x = 0; x < 8; ++x) acc += blk[y][x] * C(k, x);
                    tmp[y][k] = acc;
                }
            for (int k = 0; k < 8; ++k)
                for (int j = 0; j < 8; ++j) {
                    double acc = 0.0;
                    for (int y = 0; y < 8; ++y) acc += tmp[y][j] * C(k, y);
                    blk[k][j] = std::round(acc / step) * step;
                }
            // inverse
            for (int y = 0; y < 8; ++y)
                for (int j = 0; j < 8; ++j) {
                    double acc = 0.0;
                    for (int k = 0; k < 8; ++k) acc += blk[k][j] * C(k, y);
                    tmp[y][j] = acc;
                }
            for (int y = 0; y < 8; ++y)
                for (int x = 0; x < 8; ++x) {
                    double acc = 0.0;
                    for (int k = 0; k < 8; ++k) acc += tmp[y][k] * C(k, x);
                    p.at(by + y, bx + x) = clamp_u8(std::round(acc));
                }
        }
    }
}

void apply_distortion(LumaPlane& p, const Distortion& d, uint64_t noise_seed) {
    switch (d.kind) {
        case Distortion::Kind::none: break;
        case Distortion::Kind::gaussian_blur: apply_blur(p, d.strength); break;
        case Distortion::Kind::blockiness: apply_blockiness(p, d.strength); break;
        case Distortion::Kind::additive_noise: apply_noise(p, d.strength, noise_seed); break;
    }
}

void check_spec(const SynthSceneSpec& spec) {
    if (spec.width < 16 || spec.height < 16 || spec.width % 2 || spec.height % 2)
        throw ValidationError("synth scene dimensions must be even and at least 16x16");
    if (spec.frame_count < 1) throw ValidationError("synth scene needs at least one frame");
    if (std::abs(spec.motion_dx) > 7 || std::abs(spec.motion_dy) > 7)
        throw ValidationError("synth motion exceeds the +/-7 search range");
    if (std::abs(spec.disparity) > 32)
        throw ValidationError("synth disparity exceeds the +/-32 search range");
}

} // namespace

LumaPlane make_texture(int width, int height, uint64_t seed) {
    Rng rng(seed);
    std::vector<double> f(static_cast<size_t>(width) * height);
    for (auto& v : f) v = static_cast<double>(rng.uniform_index(256));
    smooth_wrap(f, width, height);
    // restretch: smoothing shrinks contrast, matching needs variance
    double mn = f[0], mx = f[0];
    for (double v : f) {
        mn = std::min(mn, v);
        mx = std::max(mx, v);
    }
    const double span = std::max(1.0, mx - mn);
    LumaPlane p(height, width);
    for (size_t i = 0; i < f.size(); ++i)
        p.data[i] = clamp_u8(std::round(16.0 + 224.0 * (f[i] - mn) / span));
    return p;
}

StereoFramePair render_frame(const SynthSceneSpec& spec, int t) {
    check_spec(spec);
    const LumaPlane base = make_texture(spec.width, spec.height, spec.texture_seed);
    StereoFramePair out;
    out.index = t;
    out.left = LumaPlane(spec.height, spec.width);
    out.right = LumaPlane(spec.height, spec.width);
    const int ox = wrap(t * spec.motion_dx, spec.width);
    const int oy = wrap(t * spec.motion_dy, spec.height);
    for (int y = 0; y < spec.height; ++y)
        for (int x = 0; x < spec.width; ++x)
            out.left.at(y, x) = base.at(wrap(y - oy, spec.height), wrap(x - ox, spec.width));
    for (int y = 0; y < spec.height; ++y)
        for (int x = 0; x < spec.width; ++x)
            out.right.at(y, x) = out.left.at(y, wrap(x - spec.disparity, spec.width));

    const Distortion& dl = spec.left_override ? *spec.left_override : spec.distortion;
    const Distortion& dr = spec.right_override ? *spec.right_override : spec.distortion;
    apply_distortion(out.left, dl, mix_seed(spec.texture_seed, 2 * t));
    apply_distortion(out.right, dr, mix_seed(spec.texture_seed, 2 * t + 1));
    return out;
}

SynthResult generate_scene(const SynthSceneSpec& spec, const std::string& id,
                           std::optional<double> dmos, const std::string& out_dir) {
    check_spec(spec);
    fs::create_directories(out_dir);
    const std::string left_path = (fs::path(out_dir) / (id + "_left.yuv")).string();
    const std::string right_path = (fs::path(out_dir) / (id + "_right.yuv")).string();
    const std::string truth_path = (fs::path(out_dir) / (id + "_truth.txt")).string();

    std::ofstream lf(left_path, std::ios::binary | std::ios::trunc);
    std::ofstream rf(right_path, std::ios::binary | std::ios::trunc);
    std::ofstream tf(truth_path, std::ios::trunc);
    if (!lf || !rf || !tf) throw RuntimeFailure("cannot create outputs in '" + out_dir + "'");

    for (int t = 0; t < spec.frame_count; ++t) {
        StereoFramePair fp = render_frame(spec, t);
        append_yuv420_frame(lf, fp.left);
        append_yuv420_frame(rf, fp.right);
        tf << t << ' ' << spec.motion_dx << ' ' << spec.motion_dy << ' ' << spec.disparity << "\n";
    }
    lf.flush();
    rf.flush();
    tf.flush();
    if (!lf || !rf || !tf) throw RuntimeFailure("write failed in '" + out_dir + "'");

    SynthResult res;
    res.entry.id = id;
    res.entry.left_path = left_path;
    res.entry.right_path = right_path;
    res.entry.width = spec.width;
    res.entry.height = spec.height;
    res.entry.fps = 25.0;
    res.entry.frame_count = spec.frame_count;
    res.entry.dmos = dmos;
    res.entry.distortion_tag = [&] {
        const Distortion& d = spec.distortion;
        char buf[64];
        switch (d.kind) {
            case Distortion::Kind::none: return std::string("none");
            case Distortion::Kind::gaussian_blur:
                std::snprintf(buf, sizeof(buf), "blur:%g", d.strength);
                return std::string(buf);
            case Distortion::Kind::blockiness:
                std::snprintf(buf, sizeof(buf), "blockiness:%g", d.strength);
                return std::string(buf);
            case Distortion::Kind::additive_noise:
                std::snprintf(buf, sizeof(buf), "noise:%g", d.strength);
                return std::string(buf);
        }
        return std::string("none");
    }();
    res.truth = {spec.motion_dx, spec.motion_dy, spec.disparity};
    return res;
}

namespace {

Distortion parse_distortion(const std::string& text, const std::string& ctx) {
    if (text == "none") return Distortion::none();
    auto pos = text.find(':');
    if (pos == std::string::npos)
        throw ValidationError(ctx + ": bad distortion '" + text + "'");
    const std::string kind = text.substr(0, pos);
    double s = 0.0;
    try {
        s = std::stod(text.substr(pos + 1));
    } catch (const std::exception&) {
        throw ValidationError(ctx + ": bad distortion strength in '" + text + "'");
    }
    if (kind == "blur") return Distortion::blur(s);
    if (kind == "blockiness") return Distortion::blocky(s);
    if (kind == "noise") return Distortion::noise(s);
    throw ValidationError(ctx + ": unknown distortion kind '" + kind + "'");
}

} // namespace

std::vector<SynthSceneRequest> load_synth_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open synth spec '" + path + "'");
    std::vector<SynthSceneRequest> scenes;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string ctx = path + ":" + std::to_string(lineno);
        if (line.empty() || line[0] == '#') continue;
        if (line.rfind("scene ", 0) == 0) {
            SynthSceneRequest req;
            req.id = line.substr(6);
            if (req.id.empty()) throw ValidationError(ctx + ": scene needs an id");
            scenes.push_back(std::move(req));
            continue;
        }
        if (scenes.empty()) throw ValidationError(ctx + ": key before any 'scene' line");
        auto eq = line.find('=');
        if (eq == std::string::npos) throw ValidationError(ctx + ": expected key=value");
        const std::string key = line.substr(0, eq);
        const std::string val = line.substr(eq + 1);
        SynthSceneSpec& s = scenes.back().spec;
        try {
            if (key == "width") s.width = std::stoi(val);
            else if (key == "height") s.height = std::stoi(val);
            else if (key == "frames") s.frame_count = std::stoi(val);
            else if (key == "seed") s.texture_seed = std::stoull(val);
            else if (key == "motion_dx") s.motion_dx = std::stoi(val);
            else if (key == "motion_dy") s.motion_dy = std::stoi(val);
            else if (key == "disparity") s.disparity = std::stoi(val);
            else if (key == "dmos") scenes.back().dmos = std::stod(val);
            else if (key == "distortion") s.distortion = parse_distortion(val, ctx);
            else if (key == "left_distortion") s.left_override = parse_distortion(val, ctx);
            else if (key == "right_distortion") s.right_override = parse_distortion(val, ctx);
            else throw ValidationError(ctx + ": unknown key '" + key + "'");
        } catch (const ValidationError&) {
            throw;
        } catch (const std::exception&) {
            throw ValidationError(ctx + ": malformed value for '" + key + "'");
        }
    }
    if (scenes.empty()) throw ValidationError("synth spec '" + path + "' declares no scenes");
    return scenes;
}

} // namespace vqm
