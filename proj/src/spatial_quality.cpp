#include "vqm/spatial_quality.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace vqm {

double combine_spatial(double left_score, double right_score) {
    if (!std::isfinite(left_score) || !std::isfinite(right_score))
        throw ValidationError("combine_spatial: non-finite score");
    return 0.5 * (left_score + right_score);
}

namespace {

constexpr int kWin = 7;

const std::array<double, kWin>& gauss_kernel() {
    static const std::array<double, kWin> k = [] {
        std::array<double, kWin> w{};
        const double sigma = 7.0 / 6.0;
        double sum = 0.0;
        for (int i = 0; i < kWin; ++i) {
            const double d = i - kWin / 2;
            w[i] = std::exp(-0.5 * d * d / (sigma * sigma));
            sum += w[i];
        }
        for (auto& v : w) v /= sum;
        return w;
    }();
    return k;
}

int reflect(int i, int n) {
    if (i < 0) return -i - 1;
    if (i >= n) return 2 * n - 1 - i;
    return i;
}

// Separable Gaussian filtering with symmetric borders.
RealField gauss_filter(const RealField& f) {
    const auto& k = gauss_kernel();
    RealField tmp(f.rows, f.cols), out(f.rows, f.cols);
    for (int y = 0; y < f.rows; ++y)
        for (int x = 0; x < f.cols; ++x) {
            double acc = 0.0;
            for (int i = 0; i < kWin; ++i) acc += k[i] * f.at(y, reflect(x + i - kWin / 2, f.cols));
            tmp.at(y, x) = acc;
        }
    for (int y = 0; y < f.rows; ++y)
        for (int x = 0; x < f.cols; ++x) {
            double acc = 0.0;
            for (int i = 0; i < kWin; ++i) acc += k[i] * tmp.at(reflect(y + i - kWin / 2, f.rows), x);
            out.at(y, x) = acc;
        }
    return out;
}

} // namespace

void mscn_with_sigma(const LumaPlane& frame, RealField& coeffs, RealField& sigma) {
    if (frame.rows < 16 || frame.cols < 16)
        throw ValidationError("mscn: frame must be at least 16x16");
    RealField img = to_real(frame);
    RealField sq(img.rows, img.cols);
    for (size_t i = 0; i < img.data.size(); ++i) sq.data[i] = img.data[i] * img.data[i];
    RealField mu = gauss_filter(img);
    RealField m2 = gauss_filter(sq);
    coeffs = RealField(img.rows, img.cols);
    sigma = RealField(img.rows, img.cols);
    for (size_t i = 0; i < img.data.size(); ++i) {
        const double s = std::sqrt(std::max(0.0, m2.data[i] - mu.data[i] * mu.data[i]));
        sigma.data[i] = s;
        coeffs.data[i] = (img.data[i] - mu.data[i]) / (s + 1.0);
    }
}

RealField mscn(const LumaPlane& frame) {
    RealField coeffs, sigma;
    mscn_with_sigma(frame, coeffs, sigma);
    return coeffs;
}

namespace {

// gamma -> Gamma(1/g)Gamma(3/g)/Gamma(2/g)^2, the moment ratio matched by
// the GGD shape estimate. Monotone decreasing on the grid.
struct ShapeGrid {
    std::vector<double> gamma;
    std::vector<double> ratio;
};

const ShapeGrid& shape_grid() {
    static const ShapeGrid g = [] {
        ShapeGrid s;
        for (double v = 0.2; v <= 10.0 + 1e-9; v += 0.001) {
            s.gamma.push_back(v);
            s.ratio.push_back(std::exp(std::lgamma(1.0 / v) + std::lgamma(3.0 / v) -
                                       2.0 * std::lgamma(2.0 / v)));
        }
        return s;
    }();
    return g;
}

double lookup_shape(double rho) {
    const auto& g = shape_grid();
    double best = g.gamma[0];
    double err = std::abs(g.ratio[0] - rho);
    for (size_t i = 1; i < g.gamma.size(); ++i) {
        const double e = std::abs(g.ratio[i] - rho);
        if (e < err) {
            err = e;
            best = g.gamma[i];
        }
    }
    return best;
}

// (shape, variance); false if the sample is effectively constant.
bool fit_ggd(const std::vector<double>& x, double& shape, double& variance) {
    double sum_abs = 0.0, sum_sq = 0.0;
    for (double v : x) {
        sum_abs += std::abs(v);
        sum_sq += v * v;
    }
    const double n = static_cast<double>(x.size());
    const double mean_abs = sum_abs / n;
    variance = sum_sq / n;
    if (mean_abs < 1e-10) return false;
    shape = lookup_shape(variance / (mean_abs * mean_abs));
    return true;
}

// Asymmetric GGD moment fit; params (shape, mean, left var, right var).
bool fit_aggd(const std::vector<double>& x, std::array<double, 4>& out) {
    double nl = 0, nr = 0, sl = 0, sr = 0, sum_abs = 0, sum_sq = 0;
    for (double v : x) {
        if (v < 0) {
            sl += v * v;
            nl += 1;
        } else {
            sr += v * v;
            nr += 1;
        }
        sum_abs += std::abs(v);
        sum_sq += v * v;
    }
    if (nl < 1 || nr < 1) return false;
    const double sigma_l = std::sqrt(sl / nl);
    const double sigma_r = std::sqrt(sr / nr);
    if (sigma_l < 1e-10 || sigma_r < 1e-10 || sum_sq < 1e-20) return false;
    const double n = static_cast<double>(x.size());
    const double gamma_hat = sigma_l / sigma_r;
    const double r_hat = (sum_abs / n) * (sum_abs / n) / (sum_sq / n);
    const double g2 = gamma_hat * gamma_hat;
    const double big_r = r_hat * (gamma_hat * g2 + 1.0) * (gamma_hat + 1.0) /
                         ((g2 + 1.0) * (g2 + 1.0));
    // big_r targets Gamma(2/a)^2 / (Gamma(1/a)Gamma(3/a)) = 1/ratio(a)
    const double shape = lookup_shape(1.0 / std::max(big_r, 1e-10));
    const double gr1 = std::exp(std::lgamma(1.0 / shape));
    const double gr2 = std::exp(std::lgamma(2.0 / shape));
    const double gr3 = std::exp(std::lgamma(3.0 / shape));
    const double mean = (sigma_r - sigma_l) * gr2 / std::sqrt(gr1 * gr3);
    out = {shape, mean, sigma_l * sigma_l, sigma_r * sigma_r};
    return true;
}

LumaPlane half_size(const LumaPlane& f) {
    LumaPlane out(f.rows / 2, f.cols / 2);
    for (int y = 0; y < out.rows; ++y)
        for (int x = 0; x < out.cols; ++x)
            out.at(y, x) = static_cast<uint8_t>(
                (int(f.at(2 * y, 2 * x)) + f.at(2 * y, 2 * x + 1) + f.at(2 * y + 1, 2 * x) +
                 f.at(2 * y + 1, 2 * x + 1) + 2) / 4);
    return out;
}

// 18 features of one MSCN region: GGD of the coefficients plus AGGD of the
// four neighbor products (horizontal, vertical, both diagonals).
bool region_features(const RealField& m, int y0, int x0, int rows, int cols, double* out) {
    std::vector<double> coeffs;
    coeffs.reserve(static_cast<size_t>(rows) * cols);
    for (int y = 0; y < rows; ++y)
        for (int x = 0; x < cols; ++x) coeffs.push_back(m.at(y0 + y, x0 + x));

    double shape = 0, variance = 0;
    if (!fit_ggd(coeffs, shape, variance)) return false;
    out[0] = shape;
    out[1] = variance;

    const std::array<std::pair<int, int>, 4> shifts{{{0, 1}, {1, 0}, {1, 1}, {1, -1}}};
    for (int s = 0; s < 4; ++s) {
        const auto [dy, dx] = shifts[s];
        std::vector<double> prod;
        prod.reserve(coeffs.size());
        for (int y = 0; y < rows; ++y) {
            const int yy = y + dy;
            if (yy < 0 || yy >= rows) continue;
            for (int x = 0; x < cols; ++x) {
                const int xx = x + dx;
                if (xx < 0 || xx >= cols) continue;
                prod.push_back(m.at(y0 + y, x0 + x) * m.at(y0 + yy, x0 + xx));
            }
        }
        std::array<double, 4> params{};
        if (!fit_aggd(prod, params)) return false;
        for (int i = 0; i < 4; ++i) out[2 + 4 * s + i] = params[i];
    }
    return true;
}

} // namespace

NiqeFeatureVector niqe_features(const LumaPlane& frame) {
    if (frame.rows < 32 || frame.cols < 32)
        throw ValidationError("niqe_features: frame must be at least 32x32");
    NiqeFeatureVector fv;
    RealField m1 = mscn(frame);
    RealField m2 = mscn(half_size(frame));
    const bool ok1 = region_features(m1, 0, 0, m1.rows, m1.cols, fv.v.data());
    const bool ok2 = region_features(m2, 0, 0, m2.rows, m2.cols, fv.v.data() + 18);
    if (!ok1 || !ok2) {
        fv.v.fill(0.0);
        fv.degenerate = true;
    }
    return fv;
}

namespace {

struct PatchSet {
    std::vector<Eigen::VectorXd> features; // 36 each
    std::vector<double> sharpness;
};

// All complete patches of one frame, row-major. Sharpness is the mean local
// sigma over the patch at the original scale.
PatchSet frame_patches(const LumaPlane& frame, int patch) {
    if (frame.rows < patch || frame.cols < patch)
        throw ValidationError("spatial patches: frame smaller than one patch");
    RealField m1, sigma;
    mscn_with_sigma(frame, m1, sigma);
    RealField m2 = mscn(half_size(frame));
    const int half = patch / 2;
    PatchSet set;
    for (int py = 0; py + patch <= frame.rows; py += patch) {
        for (int px = 0; px + patch <= frame.cols; px += patch) {
            Eigen::VectorXd f(36);
            double buf[36];
            if (!region_features(m1, py, px, patch, patch, buf)) continue;
            if (!region_features(m2, py / 2, px / 2, half, half, buf + 18)) continue;
            for (int i = 0; i < 36; ++i) f[i] = buf[i];
            double acc = 0.0;
            for (int y = 0; y < patch; ++y)
                for (int x = 0; x < patch; ++x) acc += sigma.at(py + y, px + x);
            set.features.push_back(std::move(f));
            set.sharpness.push_back(acc / (double(patch) * patch));
        }
    }
    return set;
}

void mean_covariance(const std::vector<Eigen::VectorXd>& rows, Eigen::VectorXd& mean,
                     Eigen::MatrixXd& cov) {
    const int n = static_cast<int>(rows.size());
    const int d = static_cast<int>(rows[0].size());
    mean = Eigen::VectorXd::Zero(d);
    for (const auto& r : rows) mean += r;
    mean /= n;
    cov = Eigen::MatrixXd::Zero(d, d);
    if (n < 2) return;
    for (const auto& r : rows) {
        const Eigen::VectorXd c = r - mean;
        cov += c * c.transpose();
    }
    cov /= (n - 1);
}

} // namespace

PristineModel train_pristine(const std::vector<LumaPlane>& frames, int patch_size) {
    if (frames.size() < 10)
        throw ValidationError("train_pristine: need at least 10 frames");
    std::vector<Eigen::VectorXd> feats;
    std::vector<double> sharp;
    for (const auto& f : frames) {
        PatchSet set = frame_patches(f, patch_size);
        feats.insert(feats.end(), set.features.begin(), set.features.end());
        sharp.insert(sharp.end(), set.sharpness.begin(), set.sharpness.end());
    }
    if (feats.empty()) throw ValidationError("train_pristine: too few usable patches");

    std::vector<double> sorted = sharp;
    std::sort(sorted.begin(), sorted.end());
    const double threshold = sorted[static_cast<size_t>(0.75 * (sorted.size() - 1))];

    std::vector<Eigen::VectorXd> selected;
    for (size_t i = 0; i < feats.size(); ++i)
        if (sharp[i] >= threshold) selected.push_back(feats[i]);
    if (selected.size() < 2) throw ValidationError("train_pristine: too few usable patches");

    PristineModel model;
    model.patch_size = patch_size;
    model.sharpness_threshold = threshold;
    model.patch_count = static_cast<int>(selected.size());
    mean_covariance(selected, model.mean, model.covariance);
    return model;
}

double niqe_score(const LumaPlane& frame, const PristineModel& model) {
    if (model.mean.size() != 36) throw ValidationError("niqe_score: untrained model");
    PatchSet set = frame_patches(frame, model.patch_size);
    if (set.features.empty()) throw RuntimeFailure("niqe_score: no usable patches in frame");
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    mean_covariance(set.features, mean, cov);

    Eigen::MatrixXd blended = 0.5 * (model.covariance + cov);
    const double reg = 1e-6 * blended.trace() / 36.0;
    blended.diagonal().array() += reg;
    Eigen::LDLT<Eigen::MatrixXd> solver(blended);
    if (solver.info() != Eigen::Success)
        throw RuntimeFailure("niqe_score: covariance factorization failed");
    const Eigen::VectorXd diff = model.mean - mean;
    const double q = diff.dot(solver.solve(diff));
    return std::sqrt(std::max(0.0, q));
}

void save_pristine_model(const std::string& path, const PristineModel& model) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw RuntimeFailure("cannot write pristine model '" + path + "'");
    out << "vquemodes-pristine v1\n";
    out << model.patch_size << ' ';
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", model.sharpness_threshold);
    out << buf << ' ' << model.patch_count << "\n";
    for (int i = 0; i < 36; ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", model.mean[i]);
        out << buf << (i + 1 < 36 ? ' ' : '\n');
    }
    for (int r = 0; r < 36; ++r)
        for (int c = 0; c < 36; ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", model.covariance(r, c));
            out << buf << (c + 1 < 36 ? ' ' : '\n');
        }
    if (!out) throw RuntimeFailure("write failed for pristine model '" + path + "'");
}

PristineModel load_pristine_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open pristine model '" + path + "'");
    std::string header;
    std::getline(in, header);
    if (!header.empty() && header.back() == '\r') header.pop_back();
    if (header != "vquemodes-pristine v1")
        throw ValidationError("pristine model '" + path + "': unsupported version '" + header + "'");
    PristineModel model;
    model.mean.resize(36);
    model.covariance.resize(36, 36);
    in >> model.patch_size >> model.sharpness_threshold >> model.patch_count;
    for (int i = 0; i < 36; ++i) in >> model.mean[i];
    for (int r = 0; r < 36; ++r)
        for (int c = 0; c < 36; ++c) in >> model.covariance(r, c);
    if (!in) throw ValidationError("pristine model '" + path + "': truncated");
    return model;
}

void ExternalScores::add(const std::string& video_id, int frame_index, double left,
                         double right) {
    if (!std::isfinite(left) || !std::isfinite(right))
        throw ValidationError("external scores: non-finite score for " + video_id);
    scores_[video_id][frame_index] = {left, right};
}

std::optional<std::pair<double, double>> ExternalScores::get(const std::string& video_id,
                                                             int frame_index) const {
    auto it = scores_.find(video_id);
    if (it == scores_.end()) return std::nullopt;
    auto jt = it->second.find(frame_index);
    if (jt == it->second.end()) return std::nullopt;
    return jt->second;
}

void ExternalScores::require_frames(const std::string& video_id, int frame_count) const {
    for (int i = 0; i < frame_count; ++i)
        if (!get(video_id, i))
            throw ValidationError("external scores: missing frame " + std::to_string(i) +
                                  " of video '" + video_id + "'");
}

ExternalScores load_external_scores(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open score file '" + path + "'");
    ExternalScores scores;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string id;
        int frame = 0;
        double l = 0, r = 0;
        if (!(ss >> id >> frame >> l >> r))
            throw ValidationError(path + ":" + std::to_string(lineno) + ": malformed score line");
        scores.add(id, frame, l, r);
    }
    return scores;
}

void save_external_scores(const std::string& path, const ExternalScores& scores) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw RuntimeFailure("cannot write score file '" + path + "'");
    char buf[64];
    for (const auto& [id, frames] : scores.all())
        for (const auto& [frame, lr] : frames) {
            std::snprintf(buf, sizeof(buf), "%.9g %.9g", lr.first, lr.second);
            out << id << ' ' << frame << ' ' << buf << "\n";
        }
    if (!out) throw RuntimeFailure("write failed for score file '" + path + "'");
}

} // namespace vqm
