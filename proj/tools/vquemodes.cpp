// Command-line front end: synth, extract, train, train-pristine, predict,
// evaluate. Exit codes: 0 success, 2 validation error, 3 runtime error.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "vqm/eval_metrics.hpp"
#include "vqm/pipeline.hpp"
#include "vqm/synthgen.hpp"

namespace fs = std::filesystem;

namespace {

vqm::PipelineConfig make_config(const std::string& config_path) {
    if (config_path.empty()) return {};
    return vqm::load_config(config_path);
}

std::vector<std::string> read_id_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw vqm::ValidationError("cannot open split file '" + path + "'");
    std::vector<std::string> ids;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) ids.push_back(line);
    }
    if (ids.empty()) throw vqm::ValidationError("split file '" + path + "' is empty");
    return ids;
}

int run_synth(const std::string& spec_path, const std::string& out_dir) {
    auto scenes = vqm::load_synth_spec(spec_path);
    std::vector<vqm::VideoManifestEntry> entries;
    for (const auto& scene : scenes) {
        auto result = vqm::generate_scene(scene.spec, scene.id, scene.dmos, out_dir);
        entries.push_back(result.entry);
        std::printf("generated %s (%dx%d, %d frames)\n", scene.id.c_str(), scene.spec.width,
                    scene.spec.height, scene.spec.frame_count);
    }
    const std::string manifest = (fs::path(out_dir) / "manifest.txt").string();
    vqm::save_manifest(manifest, entries);
    std::printf("wrote %s\n", manifest.c_str());
    return 0;
}

int run_extract(const std::string& manifest_path, const std::string& cache_path,
                vqm::PipelineConfig cfg) {
    auto entries = vqm::load_manifest(manifest_path);
    auto rows = vqm::extract_manifest_features(entries, cfg);
    vqm::write_feature_cache(cache_path, rows);
    std::printf("extracted %zu frame vectors from %zu videos -> %s\n", rows.size(),
                entries.size(), cache_path.c_str());
    return 0;
}

int run_train(const std::string& manifest_path, const std::string& cache_path,
              const std::string& split_path, const std::string& model_path,
              vqm::PipelineConfig cfg) {
    auto entries = vqm::load_manifest(manifest_path);
    auto features = vqm::group_by_video(vqm::read_feature_cache(cache_path));
    auto train_ids = read_id_list(split_path);
    auto outcome = vqm::train_quality_model(entries, features, cfg, train_ids);
    vqm::svr_save(model_path, outcome.model);
    int rows = 0;
    for (const auto& [id, n] : outcome.rows_per_video) rows += n;
    std::printf("trained on %zu videos (%d rows), %zu support vectors -> %s\n", train_ids.size(),
                rows, outcome.model.support_vectors.size(), model_path.c_str());
    return 0;
}

int run_train_pristine(const std::string& manifest_path, const std::string& model_path,
                       int max_frames) {
    auto entries = vqm::load_manifest(manifest_path);
    std::vector<vqm::LumaPlane> frames;
    for (const auto& e : entries) {
        const int limit = max_frames > 0 ? std::min(max_frames, e.frame_count) : e.frame_count;
        for (int i = 0; i < limit; ++i) {
            auto pair = vqm::read_frame_pair(e, i);
            frames.push_back(std::move(pair.left));
            frames.push_back(std::move(pair.right));
        }
    }
    auto model = vqm::train_pristine(frames);
    vqm::save_pristine_model(model_path, model);
    std::printf("pristine model from %zu frames (%d sharp patches) -> %s\n", frames.size(),
                model.patch_count, model_path.c_str());
    return 0;
}

int run_predict(const std::string& model_path, const std::string& video_id,
                const std::string& manifest_path, const std::string& cache_path,
                vqm::PipelineConfig cfg) {
    auto model = vqm::svr_load(model_path);
    std::vector<vqm::FrameFeatureVector> rows;
    if (!cache_path.empty()) {
        auto features = vqm::group_by_video(vqm::read_feature_cache(cache_path));
        auto it = features.find(video_id);
        if (it == features.end())
            throw vqm::ValidationError("video '" + video_id + "' not in cache");
        rows = it->second;
    } else {
        auto entries = vqm::load_manifest(manifest_path);
        const vqm::VideoManifestEntry* entry = nullptr;
        for (const auto& e : entries)
            if (e.id == video_id) entry = &e;
        if (!entry) throw vqm::ValidationError("video '" + video_id + "' not in manifest");
        rows = vqm::extract_features(*entry, cfg, vqm::make_spatial_provider(cfg));
    }
    auto pred = vqm::predict_video_quality(model, rows);
    std::printf("%s score %.6f frame_std %.6f\n", video_id.c_str(), pred.score, pred.frame_std);
    return 0;
}

int run_evaluate(const std::string& manifest_path, const std::string& cache_path,
                 const std::string& report_path, vqm::PipelineConfig cfg) {
    auto entries = vqm::load_manifest(manifest_path);
    auto features = vqm::group_by_video(vqm::read_feature_cache(cache_path));
    auto summary = vqm::run_trials(entries, features, cfg);
    const std::string report = vqm::render_report(summary, cfg);
    if (report_path.empty()) {
        std::fputs(report.c_str(), stdout);
    } else {
        std::ofstream out(report_path, std::ios::trunc);
        if (!out) throw vqm::RuntimeFailure("cannot write report '" + report_path + "'");
        out << report;
        std::printf("wrote %s\n", report_path.c_str());
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"VQUEMODES: no-reference stereoscopic video quality assessment"};
    app.require_subcommand(1);

    std::string config_path, manifest_path, cache_path, report_path, model_path;
    std::string spec_path, out_dir, split_path, video_id;
    int trials = -1, threads = -1, max_frames = 0;
    long seed = -1;
    int motion_range = -1, disparity_range = -1;
    bool group_by_content = false;
    std::string pristine_path, scores_path;

    auto* synth = app.add_subcommand("synth", "generate synthetic stereo scenes");
    synth->add_option("--spec", spec_path, "scene list file")->required();
    synth->add_option("--out", out_dir, "output directory")->required();

    auto* extract = app.add_subcommand("extract", "extract frame features into a cache");
    extract->add_option("--manifest", manifest_path)->required();
    extract->add_option("--out", cache_path, "feature cache path")->required();
    extract->add_option("--config", config_path);
    extract->add_option("--search-range", motion_range, "motion search range");
    extract->add_option("--disparity-range", disparity_range, "disparity search range");
    extract->add_option("--pristine-model", pristine_path);
    extract->add_option("--external-scores", scores_path);
    extract->add_option("--threads", threads);

    auto* train = app.add_subcommand("train", "train an SVR quality model");
    train->add_option("--manifest", manifest_path)->required();
    train->add_option("--cache", cache_path)->required();
    train->add_option("--split-file", split_path, "file listing training video ids")->required();
    train->add_option("--model", model_path, "output model path")->required();
    train->add_option("--config", config_path);

    auto* pristine = app.add_subcommand("train-pristine", "train the naturalness model");
    pristine->add_option("--manifest", manifest_path)->required();
    pristine->add_option("--out", model_path)->required();
    pristine->add_option("--max-frames-per-video", max_frames);

    auto* predict = app.add_subcommand("predict", "score one video with a trained model");
    predict->add_option("--model", model_path)->required();
    predict->add_option("--video", video_id)->required();
    predict->add_option("--manifest", manifest_path);
    predict->add_option("--cache", cache_path);
    predict->add_option("--config", config_path);

    auto* evaluate = app.add_subcommand("evaluate", "run the repeated-trial protocol");
    evaluate->add_option("--manifest", manifest_path)->required();
    evaluate->add_option("--cache", cache_path)->required();
    evaluate->add_option("--trials", trials);
    evaluate->add_option("--seed", seed);
    evaluate->add_option("--report", report_path, "report output path (stdout if omitted)");
    evaluate->add_option("--config", config_path);
    evaluate->add_option("--threads", threads);
    evaluate->add_flag("--group-by-content", group_by_content,
                       "split by source scene instead of by video");

    CLI11_PARSE(app, argc, argv);

    try {
        vqm::PipelineConfig cfg = make_config(config_path);
        if (motion_range > 0) cfg.motion_search_range = motion_range;
        if (disparity_range >= 0) cfg.disparity_search_range = disparity_range;
        if (!pristine_path.empty()) cfg.pristine_model_path = pristine_path;
        if (!scores_path.empty()) cfg.external_scores_path = scores_path;
        if (trials > 0) cfg.trials = trials;
        if (seed >= 0) cfg.seed = static_cast<uint64_t>(seed);
        if (threads >= 0) cfg.threads = threads;
        if (group_by_content) cfg.group_by_content = true;

        if (synth->parsed()) return run_synth(spec_path, out_dir);
        if (extract->parsed()) return run_extract(manifest_path, cache_path, cfg);
        if (train->parsed())
            return run_train(manifest_path, cache_path, split_path, model_path, cfg);
        if (pristine->parsed()) return run_train_pristine(manifest_path, model_path, max_frames);
        if (predict->parsed())
            return run_predict(model_path, video_id, manifest_path, cache_path, cfg);
        if (evaluate->parsed()) return run_evaluate(manifest_path, cache_path, report_path, cfg);
    } catch (const vqm::ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 0;
}
