#include <doctest.h>

#include <cmath>

#include "support/helpers.hpp"
#include "vqm/rng.hpp"
#include "vqm/spatial_quality.hpp"
#include "vqm/synthgen.hpp"

using namespace vqm;
using namespace vqm_test;

namespace {

LumaPlane noise_frame(int rows, int cols, uint64_t seed, int lo = 20, int span = 200) {
    Rng rng(seed);
    LumaPlane f(rows, cols);
    for (auto& v : f.data) v = uint8_t(lo + rng.uniform_index(span));
    return f;
}

LumaPlane add_noise(const LumaPlane& f, double sigma, uint64_t seed) {
    Rng rng(seed);
    LumaPlane out = f;
    for (auto& v : out.data)
        v = uint8_t(std::clamp(v + sigma * rng.normal(), 0.0, 255.0));
    return out;
}

double mean_of(const RealField& f) {
    double acc = 0;
    for (double v : f.data) acc += v;
    return acc / f.data.size();
}

double var_of(const RealField& f) {
    const double m = mean_of(f);
    double acc = 0;
    for (double v : f.data) acc += (v - m) * (v - m);
    return acc / f.data.size();
}

} // namespace

TEST_CASE("mscn of a constant frame is identically zero") {
    RealField m = mscn(LumaPlane(32, 32, 77));
    for (double v : m.data) CHECK(v == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("mscn decorrelates and normalizes a textured frame") {
    RealField m = mscn(noise_frame(128, 128, 5));
    CHECK(mean_of(m) > -0.1);
    CHECK(mean_of(m) < 0.1);
    CHECK(var_of(m) > 0.5);
    CHECK(var_of(m) < 1.5);
}

TEST_CASE("mscn is nearly invariant to doubling intensities") {
    LumaPlane f = noise_frame(96, 96, 6, 10, 110); // values 10..119, doubling stays in range
    LumaPlane doubled(96, 96);
    for (size_t i = 0; i < f.data.size(); ++i) doubled.data[i] = uint8_t(2 * f.data[i]);
    RealField a = mscn(f), b = mscn(doubled);
    double diff = 0, ref = 0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        diff += (a.data[i] - b.data[i]) * (a.data[i] - b.data[i]);
        ref += a.data[i] * a.data[i];
    }
    CHECK(std::sqrt(diff / ref) < 0.05);
}

TEST_CASE("mscn rejects tiny frames") {
    CHECK_THROWS_AS(mscn(LumaPlane(8, 8)), ValidationError);
}

TEST_CASE("niqe features have 36 entries and near-Gaussian shape on noise") {
    NiqeFeatureVector fv = niqe_features(noise_frame(128, 128, 8));
    CHECK(!fv.degenerate);
    CHECK(fv.v.size() == 36);
    CHECK(fv.v[0] > 1.7);  // GGD shape of MSCN at scale 1
    CHECK(fv.v[0] < 2.3);
    CHECK(fv.v[18] > 1.5); // and at the half scale
    CHECK(fv.v[18] < 2.7);
}

TEST_CASE("isotropic features are invariant to 90-degree rotation") {
    LumaPlane f = noise_frame(96, 96, 9);
    LumaPlane rot(96, 96);
    for (int y = 0; y < 96; ++y)
        for (int x = 0; x < 96; ++x) rot.at(x, 95 - y) = f.at(y, x);
    NiqeFeatureVector a = niqe_features(f);
    NiqeFeatureVector b = niqe_features(rot);
    CHECK(a.v[0] == doctest::Approx(b.v[0]).epsilon(1e-6));
    CHECK(a.v[1] == doctest::Approx(b.v[1]).epsilon(1e-6));
}

TEST_CASE("constant frame yields the degenerate sentinel vector") {
    NiqeFeatureVector fv = niqe_features(LumaPlane(64, 64, 100));
    CHECK(fv.degenerate);
    for (double v : fv.v) CHECK(v == 0.0);
}

TEST_CASE("pristine training on identical single-patch frames collapses the model") {
    LumaPlane frame = noise_frame(96, 96, 10);
    std::vector<LumaPlane> corpus(10, frame);
    PristineModel model = train_pristine(corpus);
    CHECK(model.patch_count >= 1);
    CHECK(model.covariance.cwiseAbs().maxCoeff() < 1e-18);

    NiqeFeatureVector one = niqe_features(frame); // 96x96: whole frame == one patch
    for (int i = 0; i < 36; ++i) CHECK(model.mean[i] == doctest::Approx(one.v[i]).epsilon(1e-9));

    // identical patch statistics score zero
    CHECK(niqe_score(frame, model) == doctest::Approx(0.0).epsilon(1e-8));

    // deterministic under a fixed corpus order
    PristineModel again = train_pristine(corpus);
    CHECK(again.mean == model.mean);
    CHECK(again.covariance == model.covariance);
    CHECK(again.sharpness_threshold == model.sharpness_threshold);
}

TEST_CASE("sharp patch count matches an independent recount") {
    std::vector<LumaPlane> corpus;
    for (uint64_t s = 0; s < 12; ++s) corpus.push_back(noise_frame(192, 96, 40 + s));
    PristineModel model = train_pristine(corpus);

    // recount: a patch qualifies when its mean local sigma reaches the
    // stored threshold
    int count = 0;
    for (const auto& f : corpus) {
        RealField coeffs, sigma;
        mscn_with_sigma(f, coeffs, sigma);
        for (int py = 0; py + 96 <= f.rows; py += 96)
            for (int px = 0; px + 96 <= f.cols; px += 96) {
                double acc = 0;
                for (int y = 0; y < 96; ++y)
                    for (int x = 0; x < 96; ++x) acc += sigma.at(py + y, px + x);
                if (acc / (96.0 * 96.0) >= model.sharpness_threshold) ++count;
            }
    }
    CHECK(model.patch_count == count);
}

TEST_CASE("train_pristine validates its corpus") {
    CHECK_THROWS_AS(train_pristine({noise_frame(96, 96, 1)}), ValidationError);
    std::vector<LumaPlane> tiny(10, noise_frame(64, 64, 2));
    CHECK_THROWS_AS(train_pristine(tiny), ValidationError); // smaller than one patch
}

TEST_CASE("niqe score tracks distortion severity") {
    std::vector<LumaPlane> corpus;
    for (uint64_t s = 0; s < 12; ++s) {
        SynthSceneSpec spec;
        spec.width = 192;
        spec.height = 96;
        spec.frame_count = 1;
        spec.texture_seed = 60 + s;
        corpus.push_back(render_frame(spec, 0).left);
    }
    PristineModel model = train_pristine(corpus);

    const double s0 = niqe_score(corpus[0], model);
    const double s5 = niqe_score(add_noise(corpus[0], 5.0, 1), model);
    const double s20 = niqe_score(add_noise(corpus[0], 20.0, 2), model);
    CHECK(s0 >= 0.0);
    CHECK(std::isfinite(s0));
    CHECK(s0 < s20);
    CHECK(s0 < s5);
    CHECK(s5 < s20);
}

TEST_CASE("pristine model file round-trips") {
    TempDir dir("pristine");
    std::vector<LumaPlane> corpus;
    for (uint64_t s = 0; s < 10; ++s) corpus.push_back(noise_frame(96, 96, 70 + s));
    PristineModel model = train_pristine(corpus);
    save_pristine_model(dir.path("p.txt"), model);
    PristineModel back = load_pristine_model(dir.path("p.txt"));
    CHECK(back.patch_size == model.patch_size);
    CHECK(back.patch_count == model.patch_count);
    CHECK(back.mean.isApprox(model.mean));
    CHECK(back.covariance.isApprox(model.covariance));

    write_text(dir.path("bad.txt"), "vquemodes-pristine v9\n");
    CHECK_THROWS_AS(load_pristine_model(dir.path("bad.txt")), ValidationError);
}

TEST_CASE("combine is the arithmetic mean") {
    CHECK(combine_spatial(4.0, 6.0) == doctest::Approx(5.0));
    CHECK(combine_spatial(7.5, 7.5) == doctest::Approx(7.5));
    Rng rng(7);
    for (int i = 0; i < 20; ++i) {
        const double a = rng.uniform() * 10, b = rng.uniform() * 10;
        CHECK(combine_spatial(a, b) == doctest::Approx((a + b) / 2.0));
        CHECK(combine_spatial(a, b) == doctest::Approx(combine_spatial(b, a)));
    }
    CHECK_THROWS_AS(combine_spatial(std::nan(""), 1.0), ValidationError);
}

TEST_CASE("external scores round-trip and report gaps") {
    TempDir dir("scores");
    ExternalScores scores;
    scores.add("vid", 0, 4.0, 6.0);
    scores.add("vid", 1, 5.0, 5.5);
    scores.add("vid", 3, 2.0, 2.5); // frame 2 missing
    save_external_scores(dir.path("s.txt"), scores);
    ExternalScores back = load_external_scores(dir.path("s.txt"));
    REQUIRE(back.get("vid", 0).has_value());
    CHECK(back.get("vid", 0)->first == doctest::Approx(4.0));
    CHECK(back.get("vid", 0)->second == doctest::Approx(6.0));
    CHECK(!back.get("vid", 2).has_value());
    CHECK(!back.get("other", 0).has_value());

    CHECK_NOTHROW(back.require_frames("vid", 2));
    CHECK_THROWS_WITH_AS(back.require_frames("vid", 4), doctest::Contains("frame 2"),
                         ValidationError);

    write_text(dir.path("bad.txt"), "vid zero 1 2\n");
    CHECK_THROWS_AS(load_external_scores(dir.path("bad.txt")), ValidationError);
}

TEST_CASE("frame-wise scores are stable on a constant-distortion sequence") {
    std::vector<LumaPlane> corpus;
    for (uint64_t s = 0; s < 12; ++s) {
        SynthSceneSpec spec;
        spec.width = 192;
        spec.height = 96;
        spec.frame_count = 1;
        spec.texture_seed = 90 + s;
        corpus.push_back(render_frame(spec, 0).left);
    }
    PristineModel model = train_pristine(corpus);

    SynthSceneSpec seq;
    seq.width = 192;
    seq.height = 96;
    seq.frame_count = 6;
    seq.texture_seed = 91; // one of the corpus textures, distorted
    seq.motion_dx = 2;
    seq.motion_dy = 1;
    seq.distortion = Distortion::blur(1.5);
    std::vector<double> frame_scores;
    for (int t = 0; t < seq.frame_count; ++t)
        frame_scores.push_back(niqe_score(render_frame(seq, t).left, model));
    double mean = 0;
    for (double v : frame_scores) mean += v;
    mean /= frame_scores.size();
    double var = 0;
    for (double v : frame_scores) var += (v - mean) * (v - mean);
    var /= frame_scores.size();
    CHECK(std::sqrt(var) / mean < 0.2);
}
