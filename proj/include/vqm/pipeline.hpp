#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vqm/bggd.hpp"
#include "vqm/media_io.hpp"
#include "vqm/spatial_quality.hpp"
#include "vqm/svr.hpp"

namespace vqm {

// Knobs shared by the CLI subcommands. Loadable from a key=value config
// file; pyramid geometry is fixed at 3 scales x 6 orientations.
struct PipelineConfig {
    int motion_search_range = 7;
    int disparity_search_range = 32;
    SvrParams svr;
    int trials = 1000;
    uint64_t seed = 1;
    int threads = 0;                          // 0 = hardware concurrency
    bool group_by_content = false;
    std::string spatial_provider = "builtin"; // "builtin" or "external"
    std::string pristine_model_path;
    std::string external_scores_path;
};

PipelineConfig load_config(const std::string& path);

// Consolidated per-frame features: 18 alphas, 18 betas, spatial score.
struct FrameFeatureVector {
    std::string video_id;
    int frame_index = 0;
    BggdFeatures bggd;
    double spatial = 0.0;

    std::vector<double> consolidated() const {
        std::vector<double> out;
        out.reserve(37);
        for (double a : bggd.alphas) out.push_back(a);
        for (double b : bggd.betas) out.push_back(b);
        out.push_back(spatial);
        return out;
    }
};

// Resolved spatial scorer: external scores override the built-in model when
// both are configured.
struct SpatialProvider {
    std::optional<PristineModel> pristine;
    std::optional<ExternalScores> external;
};
SpatialProvider make_spatial_provider(const PipelineConfig& cfg);

// Features of one video: one vector per consecutive frame pair (frame i and
// i+1 drive motion; disparity and the spatial score come from frame i).
std::vector<FrameFeatureVector> extract_features(const VideoManifestEntry& entry,
                                                 const PipelineConfig& cfg,
                                                 const SpatialProvider& spatial);

// Whole-manifest extraction, parallel over frames. Output order is manifest
// order then frame order, independent of scheduling.
std::vector<FrameFeatureVector> extract_manifest_features(
    const std::vector<VideoManifestEntry>& entries, const PipelineConfig& cfg);

// Feature cache: header "vquemodes-features v1", then one line per frame
//   video_id frame_index a1..a18 b1..b18 S chi1..chi18 degeneracy_mask
// with 9-significant-digit decimal formatting.
void write_feature_cache(const std::string& path, const std::vector<FrameFeatureVector>& rows);
std::vector<FrameFeatureVector> read_feature_cache(const std::string& path);

using FeaturesByVideo = std::map<std::string, std::vector<FrameFeatureVector>>;
FeaturesByVideo group_by_video(const std::vector<FrameFeatureVector>& rows);

// SVR training over the frames of the listed videos, each row labeled with
// its video's DMOS. rows_per_video records provenance for leakage audits.
struct TrainOutcome {
    SvrModel model;
    std::map<std::string, int> rows_per_video;
};
TrainOutcome train_quality_model(const std::vector<VideoManifestEntry>& entries,
                                 const FeaturesByVideo& features, const PipelineConfig& cfg,
                                 const std::vector<std::string>& train_ids);

struct VideoPrediction {
    double score = 0.0;      // mean of frame-level predictions
    double frame_std = 0.0;  // spread of frame-level predictions
};
VideoPrediction predict_video_quality(const SvrModel& model,
                                      const std::vector<FrameFeatureVector>& video_features);

struct TrialResult {
    int trial_id = 0;
    std::vector<std::string> train_ids;
    std::vector<std::string> test_ids;
    std::vector<std::pair<std::string, double>> predictions; // per test video
    double lcc = 0.0;
    double srocc = 0.0;
    double rmse = 0.0;
    bool logistic_applied = false; // identity transform when < 5 test videos
    std::map<std::string, int> train_rows_per_video;
};

struct MetricAggregate {
    double mean = 0.0;
    double median = 0.0;
    double stddev = 0.0;
};

struct TrialSummary {
    std::vector<TrialResult> trials;
    MetricAggregate lcc;
    MetricAggregate srocc;
    MetricAggregate rmse;
    // Metrics of all trials' (prediction, dmos) pairs pooled together and
    // logistic-fitted once.
    double pooled_lcc = 0.0;
    double pooled_srocc = 0.0;
    double pooled_rmse = 0.0;
};

// Repeated random 80:20 video-level (or content-grouped) splits with
// training, prediction and metrics per trial. Deterministic for a given
// seed; trials run in parallel with per-trial seeding.
TrialSummary run_trials(const std::vector<VideoManifestEntry>& entries,
                        const FeaturesByVideo& features, const PipelineConfig& cfg);

// Plain-text report: config echo, one machine-readable line per trial
// ("trial <id> <lcc> <srocc> <rmse>"), aggregates, pooled metrics.
std::string render_report(const TrialSummary& summary, const PipelineConfig& cfg);

// Deterministic helper: runs fn(0..n-1) on a small thread pool; exceptions
// propagate to the caller.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

} // namespace vqm
