#include "vqm/eval_metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace vqm {

double logistic(double x, const LogisticParams& p) {
    if (p.tau4 == 0.0) throw ValidationError("logistic: tau4 must be nonzero");
    return (p.tau1 - p.tau2) / (1.0 + std::exp((x - p.tau3) / std::abs(p.tau4))) + p.tau2;
}

namespace {

void check_pair(const std::vector<double>& a, const std::vector<double>& b, size_t min_len) {
    if (a.size() != b.size()) throw ValidationError("metric: length mismatch");
    if (a.size() < min_len) throw ValidationError("metric: too few points");
    for (double v : a)
        if (!std::isfinite(v)) throw ValidationError("metric: non-finite value");
    for (double v : b)
        if (!std::isfinite(v)) throw ValidationError("metric: non-finite value");
}

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / v.size();
}

double sse_of(const std::array<double, 4>& t, const std::vector<double>& x,
              const std::vector<double>& y) {
    LogisticParams p{t[0], t[1], t[2], t[3] == 0.0 ? 1e-12 : t[3]};
    double sse = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        const double d = logistic(x[i], p) - y[i];
        sse += d * d;
    }
    return sse;
}

} // namespace

LogisticParams fit_logistic(const std::vector<double>& objective,
                            const std::vector<double>& dmos) {
    check_pair(objective, dmos, 5);
    const auto [obj_min, obj_max] = std::minmax_element(objective.begin(), objective.end());
    if (*obj_max - *obj_min < 1e-12)
        throw ValidationError("fit_logistic: objective scores are constant");

    std::vector<double> sorted = objective;
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted[sorted.size() / 2];
    const double mean = mean_of(objective);
    double var = 0.0;
    for (double v : objective) var += (v - mean) * (v - mean);
    const double stdev = std::sqrt(var / objective.size());

    std::array<double, 4> init{
        *std::max_element(dmos.begin(), dmos.end()),
        *std::min_element(dmos.begin(), dmos.end()),
        median,
        stdev,
    };

    // Nelder-Mead with standard coefficients; periodic restart around the
    // incumbent keeps the simplex from collapsing early.
    auto f = [&](const std::array<double, 4>& t) { return sse_of(t, objective, dmos); };
    std::array<std::array<double, 4>, 5> simplex;
    std::array<double, 5> fv;
    auto reset_simplex = [&](const std::array<double, 4>& center) {
        simplex[0] = center;
        for (int i = 1; i < 5; ++i) {
            simplex[i] = center;
            simplex[i][i - 1] += (center[i - 1] != 0.0 ? 0.05 * center[i - 1] : 0.05);
        }
        for (int i = 0; i < 5; ++i) fv[i] = f(simplex[i]);
    };
    reset_simplex(init);

    const int max_iter = 2000;
    for (int iter = 0; iter < max_iter; ++iter) {
        std::array<int, 5> order{0, 1, 2, 3, 4};
        std::sort(order.begin(), order.end(), [&](int a, int b) { return fv[a] < fv[b]; });
        const int best = order[0], worst = order[4], second = order[3];
        if (fv[worst] - fv[best] <= 1e-10 * (std::abs(fv[best]) + 1e-12)) break;
        if (iter > 0 && iter % 500 == 0) {
            reset_simplex(simplex[best]);
            continue;
        }

        std::array<double, 4> centroid{};
        for (int i = 0; i < 5; ++i)
            if (i != worst)
                for (int d = 0; d < 4; ++d) centroid[d] += simplex[i][d] / 4.0;

        auto blend = [&](double coef) {
            std::array<double, 4> p;
            for (int d = 0; d < 4; ++d)
                p[d] = centroid[d] + coef * (centroid[d] - simplex[worst][d]);
            return p;
        };
        const auto refl = blend(1.0);
        const double f_refl = f(refl);
        if (f_refl < fv[best]) {
            const auto exp_pt = blend(2.0);
            const double f_exp = f(exp_pt);
            if (f_exp < f_refl) {
                simplex[worst] = exp_pt;
                fv[worst] = f_exp;
            } else {
                simplex[worst] = refl;
                fv[worst] = f_refl;
            }
        } else if (f_refl < fv[second]) {
            simplex[worst] = refl;
            fv[worst] = f_refl;
        } else {
            const auto contr = blend(-0.5);
            const double f_contr = f(contr);
            if (f_contr < fv[worst]) {
                simplex[worst] = contr;
                fv[worst] = f_contr;
            } else {
                for (int i = 0; i < 5; ++i) {
                    if (i == best) continue;
                    for (int d = 0; d < 4; ++d)
                        simplex[i][d] = simplex[best][d] + 0.5 * (simplex[i][d] - simplex[best][d]);
                    fv[i] = f(simplex[i]);
                }
            }
        }
    }

    int best = 0;
    for (int i = 1; i < 5; ++i)
        if (fv[i] < fv[best]) best = i;
    const auto& t = simplex[best];
    return LogisticParams{t[0], t[1], t[2], t[3] == 0.0 ? 1e-12 : t[3]};
}

double lcc(const std::vector<double>& a, const std::vector<double>& b) {
    check_pair(a, b, 2);
    const double ma = mean_of(a), mb = mean_of(b);
    double saa = 0, sbb = 0, sab = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
        sab += (a[i] - ma) * (b[i] - mb);
    }
    if (saa <= 0.0 || sbb <= 0.0) throw ValidationError("lcc: zero variance");
    return sab / std::sqrt(saa * sbb);
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
    const size_t n = v.size();
    std::vector<size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double avg = 0.5 * (i + j) + 1.0; // ranks are 1-based
        for (size_t k = i; k <= j; ++k) ranks[idx[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

} // namespace

double srocc(const std::vector<double>& a, const std::vector<double>& b) {
    check_pair(a, b, 2);
    return lcc(average_ranks(a), average_ranks(b));
}

double rmse(const std::vector<double>& a, const std::vector<double>& b) {
    check_pair(a, b, 2);
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(acc / a.size());
}

} // namespace vqm
