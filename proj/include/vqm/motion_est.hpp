#pragma once

#include "vqm/field.hpp"

namespace vqm {

// Per-8x8-block motion between two frames. Grid is floor(height/8) x
// floor(width/8); partial edge blocks are dropped.
struct MotionField {
    int block_rows = 0;
    int block_cols = 0;
    std::vector<int> dx;               // horizontal component per block
    std::vector<int> dy;               // vertical component per block
    RealField magnitudes;              // sqrt(dx^2 + dy^2) per block

    int index(int br, int bc) const { return br * block_cols + bc; }
};

inline constexpr int kBlockSize = 8;

// Three-step search over 8x8 macroblocks, SAD cost. Step sizes start at the
// largest power of two <= (range+1)/2 and halve down to 1 (4,2,1 for the
// default range of 7). Out-of-bounds candidates are skipped. Ties break to
// the smaller magnitude, then to row-major candidate order.
MotionField three_step_search(const LumaPlane& prev, const LumaPlane& curr, int search_range = 7);

// Exhaustive SAD search over the full +/-range window with the same
// tie-breaking rule. Reference implementation for the three-step path.
MotionField full_search(const LumaPlane& prev, const LumaPlane& curr, int search_range = 7);

} // namespace vqm
