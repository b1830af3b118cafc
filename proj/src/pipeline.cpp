#include "vqm/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "vqm/eval_metrics.hpp"
#include "vqm/motion_est.hpp"
#include "vqm/rng.hpp"
#include "vqm/steerable_pyramid.hpp"
#include "vqm/stereo_disparity.hpp"

namespace vqm {

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
    if (n <= 0) return;
    int workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::max(1, std::min(workers, n));
    if (workers == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto body = [&] {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config '" + path + "'");
    PipelineConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const std::string ctx = path + ":" + std::to_string(lineno);
        auto eq = line.find('=');
        if (eq == std::string::npos) throw ValidationError(ctx + ": expected key=value");
        const std::string key = line.substr(0, eq);
        const std::string val = line.substr(eq + 1);
        try {
            if (key == "motion_search_range") cfg.motion_search_range = std::stoi(val);
            else if (key == "disparity_search_range") cfg.disparity_search_range = std::stoi(val);
            else if (key == "svr_c") cfg.svr.c = std::stod(val);
            else if (key == "svr_epsilon") cfg.svr.epsilon = std::stod(val);
            else if (key == "svr_gamma") cfg.svr.gamma = std::stod(val);
            else if (key == "svr_tol") cfg.svr.tol = std::stod(val);
            else if (key == "trials") cfg.trials = std::stoi(val);
            else if (key == "seed") cfg.seed = std::stoull(val);
            else if (key == "threads") cfg.threads = std::stoi(val);
            else if (key == "group_by_content") cfg.group_by_content = (val == "1" || val == "true");
            else if (key == "spatial_provider") cfg.spatial_provider = val;
            else if (key == "pristine_model") cfg.pristine_model_path = val;
            else if (key == "external_scores") cfg.external_scores_path = val;
            else throw ValidationError(ctx + ": unknown key '" + key + "'");
        } catch (const ValidationError&) {
            throw;
        } catch (const std::exception&) {
            throw ValidationError(ctx + ": malformed value for '" + key + "'");
        }
    }
    return cfg;
}

SpatialProvider make_spatial_provider(const PipelineConfig& cfg) {
    SpatialProvider provider;
    if (!cfg.external_scores_path.empty() || cfg.spatial_provider == "external") {
        if (cfg.external_scores_path.empty())
            throw ValidationError("spatial provider 'external' needs external_scores");
        provider.external = load_external_scores(cfg.external_scores_path);
        return provider;
    }
    if (cfg.spatial_provider != "builtin")
        throw ValidationError("unknown spatial provider '" + cfg.spatial_provider + "'");
    if (cfg.pristine_model_path.empty())
        throw ValidationError("spatial provider 'builtin' needs pristine_model");
    provider.pristine = load_pristine_model(cfg.pristine_model_path);
    return provider;
}

namespace {

FrameFeatureVector extract_one_frame(const VideoManifestEntry& entry, int i,
                                     const PipelineConfig& cfg, const SpatialProvider& spatial) {
    const StereoFramePair cur = read_frame_pair(entry, i);
    const StereoFramePair next = read_frame_pair(entry, i + 1);

    const MotionField motion = three_step_search(cur.left, next.left, cfg.motion_search_range);
    const DisparityField disparity =
        estimate_disparity(cur.left, cur.right, cfg.disparity_search_range);

    const PyramidDecomposition motion_pyr = decompose(motion.magnitudes);
    const PyramidDecomposition disp_pyr = decompose(disparity.disparities);

    FrameFeatureVector fv;
    fv.video_id = entry.id;
    fv.frame_index = i;
    fv.bggd = extract_bggd_features(motion_pyr, disp_pyr);
    if (spatial.external) {
        auto lr = spatial.external->get(entry.id, i);
        if (!lr)
            throw ValidationError("external scores: missing frame " + std::to_string(i) +
                                  " of video '" + entry.id + "'");
        fv.spatial = combine_spatial(lr->first, lr->second);
    } else {
        fv.spatial = combine_spatial(niqe_score(cur.left, *spatial.pristine),
                                     niqe_score(cur.right, *spatial.pristine));
    }
    return fv;
}

} // namespace

std::vector<FrameFeatureVector> extract_features(const VideoManifestEntry& entry,
                                                 const PipelineConfig& cfg,
                                                 const SpatialProvider& spatial) {
    if (entry.frame_count < 2)
        throw ValidationError("extract_features: video '" + entry.id + "' needs >= 2 frames");
    if (entry.width / kBlockSize < 16 || entry.height / kBlockSize < 16)
        throw ValidationError("extract_features: video '" + entry.id +
                              "' must be at least 128x128 (block grid feeds a 16x16-minimum "
                              "pyramid)");
    std::vector<FrameFeatureVector> rows(entry.frame_count - 1);
    for (int i = 0; i < entry.frame_count - 1; ++i) {
        try {
            rows[i] = extract_one_frame(entry, i, cfg, spatial);
        } catch (const Error& e) {
            throw RuntimeFailure("video '" + entry.id + "' frame " + std::to_string(i) + ": " +
                                 e.what());
        }
    }
    return rows;
}

std::vector<FrameFeatureVector> extract_manifest_features(
    const std::vector<VideoManifestEntry>& entries, const PipelineConfig& cfg) {
    const SpatialProvider spatial = make_spatial_provider(cfg);

    struct Job {
        int entry_idx;
        int frame;
        int slot;
    };
    std::vector<Job> jobs;
    std::vector<int> video_offset(entries.size());
    int total = 0;
    for (size_t v = 0; v < entries.size(); ++v) {
        if (entries[v].frame_count < 2)
            throw ValidationError("extract: video '" + entries[v].id + "' needs >= 2 frames");
        video_offset[v] = total;
        for (int i = 0; i < entries[v].frame_count - 1; ++i)
            jobs.push_back({static_cast<int>(v), i, total++});
    }

    std::vector<FrameFeatureVector> rows(total);
    parallel_for(static_cast<int>(jobs.size()), cfg.threads, [&](int j) {
        const Job& job = jobs[j];
        try {
            rows[job.slot] = extract_one_frame(entries[job.entry_idx], job.frame, cfg, spatial);
        } catch (const Error& e) {
            throw RuntimeFailure("video '" + entries[job.entry_idx].id + "' frame " +
                                 std::to_string(job.frame) + ": " + e.what());
        }
    });
    return rows;
}

namespace {

constexpr const char* kCacheHeader = "vquemodes-features v1";

std::string g9(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

} // namespace

void write_feature_cache(const std::string& path, const std::vector<FrameFeatureVector>& rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw RuntimeFailure("cannot write feature cache '" + path + "'");
    out << kCacheHeader << "\n";
    for (const auto& r : rows) {
        out << r.video_id << ' ' << r.frame_index;
        for (double a : r.bggd.alphas) out << ' ' << g9(a);
        for (double b : r.bggd.betas) out << ' ' << g9(b);
        out << ' ' << g9(r.spatial);
        for (double c : r.bggd.chis) out << ' ' << g9(c);
        out << ' ' << r.bggd.degeneracy_mask << "\n";
    }
    if (!out) throw RuntimeFailure("write failed for feature cache '" + path + "'");
}

std::vector<FrameFeatureVector> read_feature_cache(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open feature cache '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("feature cache '" + path + "' is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kCacheHeader)
        throw ValidationError("feature cache '" + path + "': unexpected header '" + line + "'");
    std::vector<FrameFeatureVector> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ss(line);
        FrameFeatureVector r;
        ss >> r.video_id >> r.frame_index;
        for (auto& a : r.bggd.alphas) ss >> a;
        for (auto& b : r.bggd.betas) ss >> b;
        ss >> r.spatial;
        for (auto& c : r.bggd.chis) ss >> c;
        ss >> r.bggd.degeneracy_mask;
        if (!ss)
            throw ValidationError(path + ":" + std::to_string(lineno) + ": malformed cache line");
        rows.push_back(std::move(r));
    }
    return rows;
}

FeaturesByVideo group_by_video(const std::vector<FrameFeatureVector>& rows) {
    FeaturesByVideo by_video;
    for (const auto& r : rows) by_video[r.video_id].push_back(r);
    for (auto& [id, vec] : by_video)
        std::sort(vec.begin(), vec.end(),
                  [](const auto& a, const auto& b) { return a.frame_index < b.frame_index; });
    return by_video;
}

TrainOutcome train_quality_model(const std::vector<VideoManifestEntry>& entries,
                                 const FeaturesByVideo& features, const PipelineConfig& cfg,
                                 const std::vector<std::string>& train_ids) {
    if (train_ids.empty()) throw ValidationError("train: empty training split");
    std::map<std::string, const VideoManifestEntry*> by_id;
    for (const auto& e : entries) by_id[e.id] = &e;

    TrainOutcome outcome;
    TrainingSet data;
    for (const auto& id : train_ids) {
        auto eit = by_id.find(id);
        if (eit == by_id.end()) throw ValidationError("train: video '" + id + "' not in manifest");
        if (!eit->second->dmos)
            throw ValidationError("train: video '" + id + "' has no dmos label");
        auto fit = features.find(id);
        if (fit == features.end() || fit->second.empty())
            throw ValidationError("train: no cached features for video '" + id + "'");
        for (const auto& fv : fit->second) {
            data.features.push_back(fv.consolidated());
            data.labels.push_back(*eit->second->dmos);
            outcome.rows_per_video[id] += 1;
        }
    }
    outcome.model = svr_train(data, cfg.svr);
    return outcome;
}

VideoPrediction predict_video_quality(const SvrModel& model,
                                      const std::vector<FrameFeatureVector>& video_features) {
    if (video_features.empty())
        throw ValidationError("predict: no features for video");
    std::vector<double> scores;
    scores.reserve(video_features.size());
    for (const auto& fv : video_features) scores.push_back(svr_predict(model, fv.consolidated()));
    const double mean = std::accumulate(scores.begin(), scores.end(), 0.0) / scores.size();
    double var = 0.0;
    for (double s : scores) var += (s - mean) * (s - mean);
    VideoPrediction out;
    out.score = mean;
    out.frame_std = std::sqrt(var / scores.size());
    return out;
}

namespace {

MetricAggregate aggregate(std::vector<double> values) {
    MetricAggregate agg;
    const size_t n = values.size();
    agg.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    std::sort(values.begin(), values.end());
    agg.median = n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
    double var = 0.0;
    for (double v : values) var += (v - agg.mean) * (v - agg.mean);
    agg.stddev = std::sqrt(var / n);
    return agg;
}

// Random 80:20 split of video ids, optionally constrained so that videos
// sharing a content group never straddle the boundary.
void split_ids(const std::vector<const VideoManifestEntry*>& labeled, bool group_by_content,
               Rng& rng, std::vector<std::string>& train, std::vector<std::string>& test) {
    const int n = static_cast<int>(labeled.size());
    const int target_train = std::clamp<int>(static_cast<int>(std::lround(0.8 * n)), 1, n - 1);
    if (!group_by_content) {
        std::vector<int> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        for (int i = n - 1; i > 0; --i)
            std::swap(idx[i], idx[rng.uniform_index(static_cast<uint64_t>(i) + 1)]);
        for (int i = 0; i < n; ++i)
            (i < target_train ? train : test).push_back(labeled[idx[i]]->id);
        return;
    }
    std::vector<std::string> groups;
    std::map<std::string, std::vector<std::string>> members;
    for (const auto* e : labeled) {
        const std::string g = e->content_group();
        if (!members.count(g)) groups.push_back(g);
        members[g].push_back(e->id);
    }
    const int ng = static_cast<int>(groups.size());
    if (ng < 2)
        throw ValidationError("content-grouped split needs at least 2 content groups");
    for (int i = ng - 1; i > 0; --i)
        std::swap(groups[i], groups[rng.uniform_index(static_cast<uint64_t>(i) + 1)]);
    int assigned = 0;
    for (int g = 0; g < ng; ++g) {
        const auto& ids = members[groups[g]];
        // keep at least one group for the test side
        const bool to_train = assigned < target_train && g < ng - 1;
        for (const auto& id : ids) (to_train ? train : test).push_back(id);
        if (to_train) assigned += static_cast<int>(ids.size());
    }
}

} // namespace

TrialSummary run_trials(const std::vector<VideoManifestEntry>& entries,
                        const FeaturesByVideo& features, const PipelineConfig& cfg) {
    std::vector<const VideoManifestEntry*> labeled;
    for (const auto& e : entries)
        if (e.dmos) labeled.push_back(&e);
    if (labeled.size() < 5)
        throw ValidationError("run_trials: need at least 5 labeled videos, got " +
                              std::to_string(labeled.size()));
    if (cfg.trials < 1) throw ValidationError("run_trials: trial count must be >= 1");

    std::map<std::string, double> dmos_by_id;
    for (const auto* e : labeled) dmos_by_id[e->id] = *e->dmos;

    TrialSummary summary;
    summary.trials.resize(cfg.trials);

    parallel_for(cfg.trials, cfg.threads, [&](int t) {
        try {
            Rng rng(mix_seed(cfg.seed, static_cast<uint64_t>(t)));
            TrialResult trial;
            trial.trial_id = t;
            split_ids(labeled, cfg.group_by_content, rng, trial.train_ids, trial.test_ids);

            for (const auto& id : trial.train_ids)
                for (const auto& tid : trial.test_ids)
                    if (id == tid)
                        throw RuntimeFailure("train/test overlap on video '" + id + "'");

            TrainOutcome trained = train_quality_model(entries, features, cfg, trial.train_ids);
            trial.train_rows_per_video = trained.rows_per_video;

            std::vector<double> objective, labels;
            for (const auto& id : trial.test_ids) {
                auto fit = features.find(id);
                if (fit == features.end() || fit->second.empty())
                    throw RuntimeFailure("no cached features for test video '" + id + "'");
                const VideoPrediction pred = predict_video_quality(trained.model, fit->second);
                trial.predictions.emplace_back(id, pred.score);
                objective.push_back(pred.score);
                labels.push_back(dmos_by_id.at(id));
            }

            std::vector<double> transformed = objective;
            if (objective.size() >= 5) {
                const LogisticParams lp = fit_logistic(objective, labels);
                for (auto& v : transformed) v = logistic(v, lp);
                trial.logistic_applied = true;
            }
            trial.lcc = lcc(transformed, labels);
            trial.srocc = srocc(transformed, labels);
            trial.rmse = rmse(transformed, labels);
            summary.trials[t] = std::move(trial);
        } catch (const Error& e) {
            throw RuntimeFailure("trial " + std::to_string(t) + ": " + e.what());
        }
    });

    std::vector<double> lccs, sroccs, rmses, pooled_obj, pooled_dmos;
    for (const auto& trial : summary.trials) {
        lccs.push_back(trial.lcc);
        sroccs.push_back(trial.srocc);
        rmses.push_back(trial.rmse);
        for (const auto& [id, score] : trial.predictions) {
            pooled_obj.push_back(score);
            pooled_dmos.push_back(dmos_by_id.at(id));
        }
    }
    summary.lcc = aggregate(lccs);
    summary.srocc = aggregate(sroccs);
    summary.rmse = aggregate(rmses);

    std::vector<double> pooled_fit = pooled_obj;
    if (pooled_obj.size() >= 5) {
        const LogisticParams lp = fit_logistic(pooled_obj, pooled_dmos);
        for (auto& v : pooled_fit) v = logistic(v, lp);
    }
    summary.pooled_lcc = lcc(pooled_fit, pooled_dmos);
    summary.pooled_srocc = srocc(pooled_fit, pooled_dmos);
    summary.pooled_rmse = rmse(pooled_fit, pooled_dmos);
    return summary;
}

std::string render_report(const TrialSummary& summary, const PipelineConfig& cfg) {
    std::ostringstream out;
    char buf[160];
    out << "vquemodes-report v1\n";
    std::snprintf(buf, sizeof(buf), "config trials=%d seed=%llu split=%s\n",
                  static_cast<int>(summary.trials.size()),
                  static_cast<unsigned long long>(cfg.seed),
                  cfg.group_by_content ? "content" : "video");
    out << buf;
    for (const auto& t : summary.trials) {
        std::snprintf(buf, sizeof(buf), "trial %d %.6f %.6f %.6f\n", t.trial_id, t.lcc, t.srocc,
                      t.rmse);
        out << buf;
    }
    auto agg_line = [&](const char* name, const MetricAggregate& a) {
        std::snprintf(buf, sizeof(buf), "aggregate %s mean=%.6f median=%.6f std=%.6f\n", name,
                      a.mean, a.median, a.stddev);
        out << buf;
    };
    agg_line("lcc", summary.lcc);
    agg_line("srocc", summary.srocc);
    agg_line("rmse", summary.rmse);
    std::snprintf(buf, sizeof(buf), "pooled lcc=%.6f srocc=%.6f rmse=%.6f\n", summary.pooled_lcc,
                  summary.pooled_srocc, summary.pooled_rmse);
    out << buf;
    return out.str();
}

} // namespace vqm
