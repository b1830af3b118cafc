#include <doctest.h>

#include "support/helpers.hpp"
#include "vqm/motion_est.hpp"
#include "vqm/rng.hpp"
#include "vqm/stereo_disparity.hpp"
#include "vqm/synthgen.hpp"

using namespace vqm;
using namespace vqm_test;

TEST_CASE("ssim of identical textured blocks is 1") {
    LumaPlane t = make_texture(8, 8, 4);
    CHECK(ssim_block(t, t) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ssim of two equal constant blocks is 1") {
    LumaPlane a(8, 8, 57), b(8, 8, 57);
    CHECK(ssim_block(a, b) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ssim of a block against its negation is negative") {
    // texture centered at 127.5 with strong variance, so the structure term
    // dominates the stabilizing constants
    Rng rng(8);
    LumaPlane a(8, 8), b(8, 8);
    for (int i = 0; i < 64; ++i) {
        const uint8_t v = uint8_t(64 + rng.uniform_index(128));
        a.data[i] = v;
        b.data[i] = uint8_t(255 - v);
    }
    CHECK(ssim_block(a, b) < 0.0);
}

TEST_CASE("ssim rejects mismatched blocks and bad constants") {
    LumaPlane a(8, 8), b(8, 16);
    CHECK_THROWS_AS(ssim_block(a, b), ValidationError);
    CHECK_THROWS_AS(ssim_block(a, a, -1.0, 1.0), ValidationError);
}

TEST_CASE("pure horizontal shift is recovered on interior blocks") {
    SynthSceneSpec s;
    s.width = 128;
    s.height = 96;
    s.frame_count = 1;
    s.texture_seed = 31;
    s.disparity = 6;
    auto f = render_frame(s, 0);
    DisparityField d = estimate_disparity(f.left, f.right, 16);
    int interior = 0, hits = 0;
    for (int br = 1; br + 1 < d.block_rows; ++br)
        for (int bc = 1; bc + 1 < d.block_cols; ++bc) {
            ++interior;
            if (d.disparities.at(br, bc) == 6.0) ++hits;
        }
    CHECK(hits >= 0.95 * interior);
}

TEST_CASE("identical views give zero disparity everywhere") {
    LumaPlane f = make_texture(96, 64, 12);
    DisparityField d = estimate_disparity(f, f, 16);
    for (double v : d.disparities.data) CHECK(v == 0.0);
}

TEST_CASE("disparity survives mild additive noise on most blocks") {
    int interior = 0, hits = 0;
    for (uint64_t seed : {41u, 42u, 43u}) {
        SynthSceneSpec s;
        s.width = 128;
        s.height = 96;
        s.frame_count = 1;
        s.texture_seed = seed;
        s.disparity = 6;
        s.distortion = Distortion::noise(2.0);
        auto f = render_frame(s, 0);
        DisparityField d = estimate_disparity(f.left, f.right, 16);
        for (int br = 1; br + 1 < d.block_rows; ++br)
            for (int bc = 1; bc + 1 < d.block_cols; ++bc) {
                ++interior;
                if (d.disparities.at(br, bc) == 6.0) ++hits;
            }
    }
    CHECK(hits >= 0.95 * interior);
}

TEST_CASE("disparity grid matches the motion grid for every frame size") {
    for (auto [w, h] : {std::pair{128, 96}, {120, 88}, {131, 97}}) {
        LumaPlane f = make_texture(w, h, 7);
        DisparityField d = estimate_disparity(f, f, 8);
        MotionField m = full_search(f, f, 7);
        CHECK(d.block_rows == m.block_rows);
        CHECK(d.block_cols == m.block_cols);
    }
}

TEST_CASE("global intensity offset does not move the argmax") {
    SynthSceneSpec s;
    s.width = 96;
    s.height = 64;
    s.frame_count = 1;
    s.texture_seed = 19;
    s.disparity = -4;
    auto f = render_frame(s, 0);
    DisparityField base = estimate_disparity(f.left, f.right, 12);
    LumaPlane l = f.left, r = f.right;
    for (auto& v : l.data) v = uint8_t(v + 12);
    for (auto& v : r.data) v = uint8_t(v + 12);
    DisparityField off = estimate_disparity(l, r, 12);
    CHECK(base.disparities.data == off.disparities.data);
}

TEST_CASE("block averaging matches a direct loop oracle") {
    // constant field stays constant
    RealField c(16, 24, 3.5);
    RealField dc = block_average_downsample(c);
    CHECK(dc.rows == 2);
    CHECK(dc.cols == 3);
    for (double v : dc.data) CHECK(v == doctest::Approx(3.5));

    // 16x16 field with tile means 1 and 3
    RealField tiles(16, 16);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) tiles.at(y, x) = x < 8 ? 1.0 : 3.0;
    RealField dt = block_average_downsample(tiles);
    CHECK(dt.at(0, 0) == doctest::Approx(1.0));
    CHECK(dt.at(0, 1) == doctest::Approx(3.0));
    CHECK(dt.at(1, 0) == doctest::Approx(1.0));
    CHECK(dt.at(1, 1) == doctest::Approx(3.0));

    // random field vs independently computed tile means; edge tiles dropped
    Rng rng(77);
    RealField rnd(19, 26);
    for (auto& v : rnd.data) v = rng.uniform() * 10.0 - 5.0;
    RealField dr = block_average_downsample(rnd);
    REQUIRE(dr.rows == 2);
    REQUIRE(dr.cols == 3);
    for (int r = 0; r < dr.rows; ++r)
        for (int c2 = 0; c2 < dr.cols; ++c2) {
            double acc = 0.0;
            for (int y = 0; y < 8; ++y)
                for (int x = 0; x < 8; ++x) acc += rnd.at(r * 8 + y, c2 * 8 + x);
            CHECK(dr.at(r, c2) == doctest::Approx(acc / 64.0).epsilon(1e-12));
        }

    CHECK_THROWS_AS(block_average_downsample(RealField(4, 4)), ValidationError);
}
