#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vqm/media_io.hpp"

namespace vqm {

// Parameterized distortion applied to a rendered view.
struct Distortion {
    enum class Kind { none, gaussian_blur, blockiness, additive_noise };
    Kind kind = Kind::none;
    double strength = 0.0; // blur sigma, quantization step, or noise sigma

    static Distortion none() { return {}; }
    static Distortion blur(double sigma) { return {Kind::gaussian_blur, sigma}; }
    static Distortion blocky(double step) { return {Kind::blockiness, step}; }
    static Distortion noise(double sigma) { return {Kind::additive_noise, sigma}; }
};

// Description of a synthetic stereo scene with known ground truth. The base
// texture translates by global_motion each frame (wrap-around borders) and
// the right view is the left shifted horizontally by global_disparity before
// any distortion is applied.
struct SynthSceneSpec {
    int width = 320;
    int height = 224;
    int frame_count = 10;
    uint64_t texture_seed = 1;
    int motion_dx = 0;
    int motion_dy = 0;
    int disparity = 0;
    Distortion distortion;
    std::optional<Distortion> left_override;  // per-view asymmetric overrides
    std::optional<Distortion> right_override;
};

struct GroundTruth {
    // Constant over the frame: every interior block moves by (dx, dy) and
    // sits at horizontal disparity d.
    int motion_dx = 0;
    int motion_dy = 0;
    int disparity = 0;
};

struct SynthResult {
    VideoManifestEntry entry;
    GroundTruth truth;
};

// Renders the scene into <out_dir>/<id>_left.yuv / _right.yuv plus a
// ground-truth sidecar <id>_truth.txt with one "frame_index dx dy d" record
// per frame. Deterministic: identical spec and seed give identical bytes.
SynthResult generate_scene(const SynthSceneSpec& spec, const std::string& id,
                           std::optional<double> dmos, const std::string& out_dir);

// In-memory render of frame t of both views (used by tests and by
// generate_scene itself).
StereoFramePair render_frame(const SynthSceneSpec& spec, int t);

// Seeded band-limited texture: white noise smoothed to give block matching
// and SSIM windows usable structure. Exposed for fixtures.
LumaPlane make_texture(int width, int height, uint64_t seed);

// Scene list file for the `synth` CLI subcommand: sections started by
// "scene <id>", followed by key=value lines (width, height, frames, seed,
// motion_dx, motion_dy, disparity, dmos, distortion, left_distortion,
// right_distortion). Distortion syntax: none | blur:S | blockiness:S |
// noise:S.
struct SynthSceneRequest {
    std::string id;
    SynthSceneSpec spec;
    std::optional<double> dmos;
};
std::vector<SynthSceneRequest> load_synth_spec(const std::string& path);

} // namespace vqm
