#pragma once

#include "vqm/field.hpp"

namespace vqm {

// Per-8x8-block horizontal disparity between a rectified left/right pair.
// Grid dimensions match MotionField for the same frame size.
struct DisparityField {
    int block_rows = 0;
    int block_cols = 0;
    RealField disparities;
};

// Standard SSIM constants for 8-bit data: (0.01*255)^2 and (0.03*255)^2.
inline constexpr double kSsimC1 = 6.5025;
inline constexpr double kSsimC2 = 58.5225;

// Single-window SSIM (luminance * contrast * structure product) of two
// equally sized blocks, population statistics, value in [-1, 1].
double ssim_block(const LumaPlane& a, int ay, int ax, const LumaPlane& b, int by, int bx,
                  int block, double c1 = kSsimC1, double c2 = kSsimC2);

// Convenience overload for whole-plane blocks of equal dimensions.
double ssim_block(const LumaPlane& a, const LumaPlane& b, double c1 = kSsimC1,
                  double c2 = kSsimC2);

// For each 8x8 left-view block, the integer horizontal offset within
// +/-search_range that maximizes SSIM against the right view. Ties break to
// the smallest |d|, negative before positive. Out-of-bounds offsets are
// skipped (offset 0 is always available).
DisparityField estimate_disparity(const LumaPlane& left, const LumaPlane& right,
                                  int search_range = 32);

// Block-average downsampling for dense maps supplied externally: each output
// cell is the mean of one factor x factor tile; partial edge tiles are
// dropped.
RealField block_average_downsample(const RealField& map, int factor = 8);

} // namespace vqm
