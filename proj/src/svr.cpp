#include "vqm/svr.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <list>
#include <sstream>
#include <unordered_map>

namespace vqm {

namespace {

void check_training_set(const TrainingSet& data) {
    if (data.features.size() < 2) throw ValidationError("svr_train: need at least 2 rows");
    if (data.features.size() != data.labels.size())
        throw ValidationError("svr_train: feature/label count mismatch");
    const size_t dim = data.features[0].size();
    if (dim == 0) throw ValidationError("svr_train: empty feature vectors");
    for (const auto& row : data.features) {
        if (row.size() != dim) throw ValidationError("svr_train: inconsistent feature dimension");
        for (double v : row)
            if (!std::isfinite(v)) throw ValidationError("svr_train: non-finite feature");
    }
    for (double y : data.labels)
        if (!std::isfinite(y)) throw ValidationError("svr_train: non-finite label");
}

double rbf(const std::vector<double>& a, const std::vector<double>& b, double gamma) {
    double d2 = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        d2 += d * d;
    }
    return std::exp(-gamma * d2);
}

// Row-wise RBF kernel cache with an LRU byte cap; values are identical
// whether or not a row was cached, so results never depend on eviction.
class KernelCache {
public:
    KernelCache(const std::vector<std::vector<double>>& rows, double gamma, size_t max_bytes)
        : rows_(rows), gamma_(gamma) {
        max_rows_ = std::max<size_t>(2, max_bytes / (rows.size() * sizeof(double) + 64));
    }

    const std::vector<double>& row(int i) {
        auto it = map_.find(i);
        if (it != map_.end()) {
            lru_.splice(lru_.begin(), lru_, it->second.second);
            return it->second.first;
        }
        if (map_.size() >= max_rows_) {
            map_.erase(lru_.back());
            lru_.pop_back();
        }
        std::vector<double> values(rows_.size());
        for (size_t j = 0; j < rows_.size(); ++j) values[j] = rbf(rows_[i], rows_[j], gamma_);
        lru_.push_front(i);
        auto [pos, inserted] = map_.emplace(i, std::make_pair(std::move(values), lru_.begin()));
        return pos->second.first;
    }

private:
    const std::vector<std::vector<double>>& rows_;
    double gamma_;
    size_t max_rows_;
    std::list<int> lru_;
    std::unordered_map<int, std::pair<std::vector<double>, std::list<int>::iterator>> map_;
};

} // namespace

TrainingSet svr_normalize(const TrainingSet& data, std::vector<double>& feat_min,
                          std::vector<double>& feat_range) {
    const size_t dim = data.features[0].size();
    feat_min.assign(dim, std::numeric_limits<double>::infinity());
    std::vector<double> feat_max(dim, -std::numeric_limits<double>::infinity());
    for (const auto& row : data.features)
        for (size_t d = 0; d < dim; ++d) {
            feat_min[d] = std::min(feat_min[d], row[d]);
            feat_max[d] = std::max(feat_max[d], row[d]);
        }
    feat_range.resize(dim);
    for (size_t d = 0; d < dim; ++d) feat_range[d] = feat_max[d] - feat_min[d];

    TrainingSet out;
    out.labels = data.labels;
    out.features.reserve(data.features.size());
    for (const auto& row : data.features) {
        std::vector<double> n(dim);
        for (size_t d = 0; d < dim; ++d)
            n[d] = feat_range[d] > 0.0 ? (row[d] - feat_min[d]) / feat_range[d] : 0.0;
        out.features.push_back(std::move(n));
    }
    return out;
}

double svr_dual_objective(const TrainingSet& normalized, double epsilon, double gamma,
                          const std::vector<double>& beta) {
    const size_t n = normalized.features.size();
    double quad = 0.0, lin = 0.0;
    for (size_t i = 0; i < n; ++i) {
        if (beta[i] == 0.0) {
            continue;
        }
        for (size_t j = 0; j < n; ++j) {
            if (beta[j] == 0.0) continue;
            quad += beta[i] * beta[j] * rbf(normalized.features[i], normalized.features[j], gamma);
        }
    }
    for (size_t i = 0; i < n; ++i)
        lin += epsilon * std::abs(beta[i]) - normalized.labels[i] * beta[i];
    return 0.5 * quad + lin;
}

SvrModel svr_train(const TrainingSet& data, const SvrParams& params) {
    check_training_set(data);
    if (params.c <= 0.0) throw ValidationError("svr_train: C must be positive");

    SvrModel model;
    model.dim = static_cast<int>(data.features[0].size());
    model.c = params.c;

    const TrainingSet norm = svr_normalize(data, model.feat_min, model.feat_range);
    const int n = static_cast<int>(norm.features.size());

    double label_mean = 0.0;
    for (double y : norm.labels) label_mean += y;
    label_mean /= n;
    double label_var = 0.0;
    for (double y : norm.labels) label_var += (y - label_mean) * (y - label_mean);
    label_var /= n;

    model.epsilon = params.epsilon >= 0.0 ? params.epsilon : 0.1 * std::sqrt(label_var);
    if (params.gamma > 0.0) {
        model.gamma = params.gamma;
    } else {
        double var_sum = 0.0;
        for (int d = 0; d < model.dim; ++d) {
            double m = 0.0, m2 = 0.0;
            for (const auto& row : norm.features) {
                m += row[d];
                m2 += row[d] * row[d];
            }
            m /= n;
            var_sum += m2 / n - m * m;
        }
        const double mean_var = var_sum / model.dim;
        model.gamma = mean_var > 1e-12 ? 1.0 / (model.dim * mean_var) : 1.0 / model.dim;
    }

    // Constant labels admit the trivial exact solution.
    double ymin = norm.labels[0], ymax = norm.labels[0];
    for (double y : norm.labels) {
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
    }
    if (ymax - ymin < 1e-12) {
        model.bias = norm.labels[0];
        model.degenerate = true;
        return model;
    }

    // Sequential optimization of the dual in the 2n nonnegative-split form:
    // index t < n is the +side of row t, t >= n the -side. beta = plus - minus.
    const double C = params.c;
    const double eps = model.epsilon;
    std::vector<double> a(2 * n, 0.0);
    std::vector<double> f(n, 0.0); // f[k] = sum_j beta_j K(k, j)
    KernelCache cache(norm.features, model.gamma, size_t(256) << 20);

    auto violation = [&](int t) {
        const int k = t < n ? t : t - n;
        return t < n ? norm.labels[k] - f[k] - eps : norm.labels[k] - f[k] + eps;
    };

    const long max_iter = std::max<long>(200000, 200L * n);
    long iter = 0;
    for (; iter < max_iter; ++iter) {
        // maximal violating pair, lowest index on ties
        double m_up = -std::numeric_limits<double>::infinity();
        double m_low = std::numeric_limits<double>::infinity();
        int i = -1, j = -1;
        for (int t = 0; t < 2 * n; ++t) {
            const bool plus_side = t < n;
            const double v = violation(t);
            const bool in_up = plus_side ? a[t] < C : a[t] > 0.0;
            const bool in_low = plus_side ? a[t] > 0.0 : a[t] < C;
            if (in_up && v > m_up) {
                m_up = v;
                i = t;
            }
            if (in_low && v < m_low) {
                m_low = v;
                j = t;
            }
        }
        model.kkt_gap = m_up - m_low;
        if (model.kkt_gap <= params.tol || i < 0 || j < 0) break;

        const int bi = i < n ? i : i - n;
        const int bj = j < n ? j : j - n;
        const std::vector<double>& ki = cache.row(bi);
        const std::vector<double>& kj = cache.row(bj);
        const double eta = std::max(ki[bi] + kj[bj] - 2.0 * ki[bj], 1e-12);
        double step = (m_up - m_low) / eta;

        // box limits along the feasible direction
        const double cap_i = (i < n) ? C - a[i] : a[i];
        const double cap_j = (j < n) ? a[j] : C - a[j];
        step = std::min(step, std::min(cap_i, cap_j));
        assert(step > 0.0);
        // exact objective change of the two-variable update; must descend
        assert(-step * (m_up - m_low) + 0.5 * step * step * eta <= 1e-9);

        a[i] += (i < n) ? step : -step;
        a[j] += (j < n) ? -step : step;
        for (int k = 0; k < n; ++k) f[k] += step * (ki[k] - kj[k]);
    }

    // bias from the final violation interval
    double m_up = -std::numeric_limits<double>::infinity();
    double m_low = std::numeric_limits<double>::infinity();
    for (int t = 0; t < 2 * n; ++t) {
        const bool plus_side = t < n;
        const double v = violation(t);
        if ((plus_side ? a[t] < C : a[t] > 0.0)) m_up = std::max(m_up, v);
        if ((plus_side ? a[t] > 0.0 : a[t] < C)) m_low = std::min(m_low, v);
    }
    model.bias = 0.5 * (m_up + m_low);

    for (int k = 0; k < n; ++k) {
        const double beta = a[k] - a[k + n];
        if (beta != 0.0) {
            model.support_vectors.push_back(norm.features[k]);
            model.dual_coeffs.push_back(beta);
        }
    }
    return model;
}

double svr_predict(const SvrModel& model, const std::vector<double>& features) {
    if (static_cast<int>(features.size()) != model.dim)
        throw ValidationError("svr_predict: feature dimension mismatch");
    std::vector<double> x(features.size());
    for (size_t d = 0; d < features.size(); ++d) {
        if (!std::isfinite(features[d])) throw ValidationError("svr_predict: non-finite feature");
        x[d] = model.feat_range[d] > 0.0 ? (features[d] - model.feat_min[d]) / model.feat_range[d]
                                         : 0.0;
    }
    double acc = model.bias;
    for (size_t s = 0; s < model.support_vectors.size(); ++s)
        acc += model.dual_coeffs[s] * rbf(x, model.support_vectors[s], model.gamma);
    return acc;
}

namespace {

uint64_t fnv1a(const std::string& text) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string format17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

void svr_save(const std::string& path, const SvrModel& model) {
    std::ostringstream body;
    body << model.dim << ' ' << model.support_vectors.size() << ' ' << format17(model.c) << ' '
         << format17(model.epsilon) << ' ' << format17(model.gamma) << ' '
         << format17(model.bias) << ' ' << (model.degenerate ? 1 : 0) << "\n";
    auto write_vec = [&](const std::vector<double>& v) {
        for (size_t i = 0; i < v.size(); ++i) body << format17(v[i]) << (i + 1 < v.size() ? " " : "");
        body << "\n";
    };
    write_vec(model.feat_min);
    write_vec(model.feat_range);
    for (size_t s = 0; s < model.support_vectors.size(); ++s) {
        body << format17(model.dual_coeffs[s]);
        for (double v : model.support_vectors[s]) body << ' ' << format17(v);
        body << "\n";
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw RuntimeFailure("cannot write model '" + path + "'");
    char sum[32];
    std::snprintf(sum, sizeof(sum), "%016llx", static_cast<unsigned long long>(fnv1a(body.str())));
    out << "vquemodes-svr v1\n" << body.str() << "checksum " << sum << "\n";
    if (!out) throw RuntimeFailure("write failed for model '" + path + "'");
}

SvrModel svr_load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open model '" + path + "'");
    std::string header;
    std::getline(in, header);
    if (!header.empty() && header.back() == '\r') header.pop_back();
    if (header != "vquemodes-svr v1")
        throw ValidationError("model '" + path + "': unsupported version '" + header + "'");

    std::string body, line;
    std::string checksum_line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.rfind("checksum ", 0) == 0) {
            checksum_line = line.substr(9);
            break;
        }
        body += line;
        body += "\n";
    }
    if (checksum_line.empty()) throw ValidationError("model '" + path + "': missing checksum");
    char sum[32];
    std::snprintf(sum, sizeof(sum), "%016llx", static_cast<unsigned long long>(fnv1a(body)));
    if (checksum_line != sum) throw ValidationError("model '" + path + "': checksum mismatch");

    std::istringstream ss(body);
    SvrModel model;
    size_t n_sv = 0;
    int degenerate = 0;
    ss >> model.dim >> n_sv >> model.c >> model.epsilon >> model.gamma >> model.bias >> degenerate;
    if (!ss || model.dim <= 0) throw ValidationError("model '" + path + "': malformed header");
    model.degenerate = degenerate != 0;
    model.feat_min.resize(model.dim);
    model.feat_range.resize(model.dim);
    for (auto& v : model.feat_min) ss >> v;
    for (auto& v : model.feat_range) ss >> v;
    model.support_vectors.assign(n_sv, std::vector<double>(model.dim));
    model.dual_coeffs.resize(n_sv);
    for (size_t s = 0; s < n_sv; ++s) {
        ss >> model.dual_coeffs[s];
        for (int d = 0; d < model.dim; ++d) ss >> model.support_vectors[s][d];
    }
    if (!ss) throw ValidationError("model '" + path + "': truncated body");
    return model;
}

} // namespace vqm
